"""Initial-data profiles: Gaussians, wave packets and seeded random fields.

Random fields draw from ``numpy.random.Generator(PCG64(seed))`` so a seed
fixes the data on every platform that ships the same bit generator.
"""
from __future__ import annotations

import numpy as np

from .grid import ComplexField

PRNG_NAME = "numpy.PCG64"


def rng_from_seed(seed):
    return np.random.Generator(np.random.PCG64(seed))


def gaussian(grid, amplitude=1.0, width=1.0, center=0.0, components=1):
    """``amplitude * exp(-((x - center) / width)^2)`` in the first component.

    On the toy grid the profile is the constant vector ``amplitude * (1, ..., 1) / sqrt(d)``.
    """
    vals = np.zeros((components, grid.n), dtype=complex)
    if grid.is_periodic:
        vals[0] = amplitude * np.exp(-(((grid.x - center) / width) ** 2))
    else:
        vals[0] = amplitude / np.sqrt(grid.n)
    return ComplexField(grid, vals)


def packet(grid, amplitude=1.0, width=1.0, center=0.0, wavenumber=1.0, components=1):
    """Gaussian envelope modulated by ``exp(i k x)`` (toy: phases ``exp(i k m)``)."""
    base = gaussian(grid, amplitude, width, center, components).values.copy()
    phase = np.exp(1j * wavenumber * (grid.x - center)) if grid.is_periodic else np.exp(1j * wavenumber * grid.x)
    base[0] = base[0] * phase
    return ComplexField(grid, base)


def random_field(grid, components, rng, width=1.0, bandwidth=4.0):
    """Smooth random array ``(components, n)``, unit D-scale, localised near ``x = 0``.

    Periodic grids: complex white noise filtered by ``exp(-(xi/bandwidth)^2)``
    and windowed by a Gaussian of the given width.  Toy grid: a complex
    normal vector.
    """
    shape = (components, grid.n)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if not grid.is_periodic:
        return noise / np.sqrt(2 * grid.n * components)
    filt = np.exp(-((grid.wavenumbers / bandwidth) ** 2))
    smooth = np.fft.ifft(np.fft.fft(noise, axis=-1) * filt, axis=-1)
    field = smooth * np.exp(-((grid.x / width) ** 2))
    scale = np.sqrt(grid.dx * np.sum(np.abs(field) ** 2))
    return field / scale if scale > 0 else field


def random_profile(grid, amplitude=1.0, width=1.0, seed=0, components=1):
    rng = rng_from_seed(seed)
    return ComplexField(grid, amplitude * random_field(grid, components, rng, width))
