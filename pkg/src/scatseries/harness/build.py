"""Turn a validated :class:`ExperimentConfig` into library objects."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..evolve import IntegratorConfig, Scheme, default_scheme
from ..grid import ComplexField, SpatialGrid
from ..nonlinearity import NonlinearitySpec
from ..norms import d_norm
from ..profiles import gaussian, packet, random_profile
from ..propagator import PropagatorSpec
from ..scattering import ScatterThresholds


@dataclass(frozen=True)
class Setup:
    prop: PropagatorSpec
    nl: NonlinearitySpec
    cfg: IntegratorConfig
    thresholds: ScatterThresholds


def build_grid(config):
    g = config.grid
    if config.equation.startswith("toy"):
        return SpatialGrid.toy(g.d)
    return SpatialGrid.periodic(g.L, g.N)


def build_setup(config, lam=None, dt=None, horizon=None, grid=None):
    grid = build_grid(config) if grid is None else grid
    lam = config.lam if lam is None else lam
    eq = config.equation
    if eq == "nls":
        prop = PropagatorSpec.schrodinger(grid)
        nl = NonlinearitySpec.gauge_power(config.p, lam)
    elif eq == "kg":
        prop = PropagatorSpec.klein_gordon(grid, config.kg_mass)
        nl = NonlinearitySpec.real_odd_power(config.p, lam)
    else:
        prop = PropagatorSpec.toy(grid, config.grid.frequencies or ())
        if eq == "toy":
            nl = NonlinearitySpec.toy_gauge_power(config.p, lam)
        else:
            nl = NonlinearitySpec.toy_convolution_cubic(np.array(config.conv_kernel), lam)
    scheme = Scheme(config.integrator.scheme) if config.integrator.scheme else default_scheme(nl)
    cfg = IntegratorConfig(
        dt=config.horizon.dt if dt is None else dt,
        horizon=config.horizon.T if horizon is None else horizon,
        scheme=scheme,
        conservation_check_every=config.integrator.conservation_check_every,
        save_every=config.integrator.save_every,
    )
    th = config.thresholds
    thresholds = ScatterThresholds(tail=th.tail, boundary_mass=th.boundary_mass, noise_floor=th.noise_floor)
    return Setup(prop, nl, cfg, thresholds)


def build_field(data, prop, grid=None):
    """Initial data from a ``DataConfig`` section; real-valued pairs for KG."""
    grid = prop.grid if grid is None else grid
    comps = prop.components
    if data.profile == "gaussian":
        f = gaussian(grid, data.amplitude, data.width, components=comps)
    elif data.profile == "packet":
        f = packet(grid, data.amplitude, data.width, wavenumber=data.wavenumber, components=comps)
    else:
        f = random_profile(grid, data.amplitude, data.width, data.seed, comps)
    if comps == 2:
        f = ComplexField(grid, f.values.real)
    if data.normalize_to is not None:
        norm = d_norm(f)
        if norm > 0:
            f = f * (data.normalize_to / norm)
    return f


def checkpoint_stride(cfg):
    """Largest save stride that still records every node the tail checkpoints use."""
    steps_per_eighth = round(cfg.horizon / (8 * cfg.dt))
    stride = max(1, min(cfg.save_every, steps_per_eighth))
    while steps_per_eighth % stride:
        stride -= 1
    return stride
