"""Linear groups U(t): free Schrodinger, Klein-Gordon pair, toy diagonal.

All array-level routines act on arrays of shape ``(..., components, n)`` so the
same code evolves one field, a stack of fields, or a jet of Taylor
coefficients.  ``t`` may be a scalar or a 1D array matched to the leading axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ComponentMismatchError, GridMismatchError, UnsupportedCombinationError
from .grid import ComplexField, SpatialGrid, Trajectory

#: incommensurate default frequencies for the toy group
DEFAULT_TOY_FREQUENCIES = (1.0, 2.0 ** 0.5, 3.0 ** 0.5, 5.0 ** 0.5)


class PropagatorKind(enum.Enum):
    SCHRODINGER = "schrodinger"
    KLEIN_GORDON = "klein-gordon"
    TOY_DIAGONAL = "toy"


@dataclass(frozen=True)
class PropagatorSpec:
    kind: PropagatorKind
    grid: SpatialGrid
    toy_frequencies: tuple = field(default=())
    kg_mass: float = 1.0

    def __post_init__(self):
        if self.kind is PropagatorKind.TOY_DIAGONAL:
            if self.grid.is_periodic:
                raise GridMismatchError("the toy group lives on a toy grid")
            freqs = tuple(float(a) for a in (self.toy_frequencies or DEFAULT_TOY_FREQUENCIES[: self.grid.n]))
            if len(freqs) != self.grid.n:
                raise ValueError(f"need {self.grid.n} toy frequencies, got {len(freqs)}")
            object.__setattr__(self, "toy_frequencies", freqs)
        else:
            if not self.grid.is_periodic:
                raise GridMismatchError(f"{self.kind.value} needs a periodic grid")
            if self.kg_mass < 0:
                raise ValueError("kg_mass must be >= 0")

    @classmethod
    def schrodinger(cls, grid):
        return cls(PropagatorKind.SCHRODINGER, grid)

    @classmethod
    def klein_gordon(cls, grid, mass=1.0):
        return cls(PropagatorKind.KLEIN_GORDON, grid, kg_mass=float(mass))

    @classmethod
    def toy(cls, grid, frequencies=()):
        return cls(PropagatorKind.TOY_DIAGONAL, grid, tuple(frequencies))

    @property
    def components(self):
        return 2 if self.kind is PropagatorKind.KLEIN_GORDON else 1

    @property
    def uses_fft(self):
        return self.kind is not PropagatorKind.TOY_DIAGONAL

    def max_phase_rate(self):
        """Largest |frequency| of the group, used for step-size diagnostics."""
        if self.kind is PropagatorKind.SCHRODINGER:
            return 0.5 * float(np.max(self.grid.wavenumbers ** 2))
        if self.kind is PropagatorKind.KLEIN_GORDON:
            return float(np.sqrt(self.kg_mass ** 2 + np.max(self.grid.wavenumbers ** 2)))
        return float(np.max(np.abs(self.toy_frequencies)))

    def dispersion(self):
        """Per-mode frequency: xi^2/2, sqrt(m^2 + xi^2) or the toy alphas."""
        if self.kind is PropagatorKind.SCHRODINGER:
            return 0.5 * self.grid.wavenumbers ** 2
        if self.kind is PropagatorKind.KLEIN_GORDON:
            return np.sqrt(self.kg_mass ** 2 + self.grid.wavenumbers ** 2)
        return np.asarray(self.toy_frequencies)

    # -- array level -------------------------------------------------------
    def evolve_array(self, t, arr):
        """Apply U(t) to ``arr`` (shape ``(..., C, n)``)."""
        arr = np.asarray(arr, dtype=complex)
        if arr.shape[-2] != self.components or arr.shape[-1] != self.grid.n:
            raise ComponentMismatchError(
                f"array of shape {arr.shape} does not match {self.components} x {self.grid.n}")
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            if t == 0.0:
                return arr.copy()
            mult = _multipliers(self, float(t))
        else:
            mult = _build_multipliers(self, t[:, None])

        if self.kind is PropagatorKind.TOY_DIAGONAL:
            return arr * _expand(mult, t)
        hat = np.fft.fft(arr, axis=-1)
        if self.kind is PropagatorKind.SCHRODINGER:
            hat = hat * _expand(mult, t)
        else:
            c, w, wdot_mix = mult
            u_hat, v_hat = hat[..., 0, :], hat[..., 1, :]
            hat = np.stack([c * u_hat + w * v_hat, wdot_mix * u_hat + c * v_hat], axis=-2)
        return np.fft.ifft(hat, axis=-1)

    def gradient_array(self, arr):
        if not self.grid.is_periodic:
            raise UnsupportedCombinationError("no spatial gradient on the toy model")
        return np.fft.ifft(1j * self.grid.wavenumbers * np.fft.fft(arr, axis=-1), axis=-1)

    def profiles(self, traj):
        """Interaction-picture profiles ``U(-t_i) u(t_i)`` of a trajectory."""
        return self.evolve_array(-traj.times, traj.snapshots)

    def free_trajectory(self, g, times):
        """Exact free evolution ``U(t) g`` sampled at ``times``."""
        times = np.asarray(times, dtype=float)
        self.check_field(g)
        snaps = self.evolve_array(times, np.broadcast_to(g.values, (times.size,) + g.values.shape))
        return Trajectory(self.grid, times, snaps, {"scheme": "exact-free"})

    def check_field(self, f):
        if f.grid != self.grid:
            raise GridMismatchError("field grid differs from propagator grid")
        if f.components != self.components:
            raise ComponentMismatchError(
                f"{self.kind.value} expects {self.components} component(s), got {f.components}")


def _expand(mult, t):
    # scalar t: (n,) -> broadcast over (..., C, n); array t: (M, n) -> (M, 1, n)
    return mult if np.ndim(t) == 0 else mult[:, None, :]


def _build_multipliers(spec, t):
    if spec.kind is PropagatorKind.SCHRODINGER:
        return np.exp(-0.5j * t * spec.grid.wavenumbers ** 2)
    if spec.kind is PropagatorKind.TOY_DIAGONAL:
        return np.exp(1j * t * np.asarray(spec.toy_frequencies))
    lam = np.sqrt(spec.kg_mass ** 2 + spec.grid.wavenumbers ** 2)
    c = np.cos(lam * t)
    s = np.sin(lam * t)
    w = np.where(lam > 0, s / np.where(lam > 0, lam, 1.0), t * np.ones_like(lam))
    return c, np.ascontiguousarray(np.broadcast_to(w, c.shape)), -lam * s


@lru_cache(maxsize=64)
def _multipliers(spec, t):
    mult = _build_multipliers(spec, t)
    for m in (mult if isinstance(mult, tuple) else (mult,)):
        if isinstance(m, np.ndarray) and m.flags.owndata:
            m.flags.writeable = False
    return mult


def apply_U(spec, t, f):
    """Free evolution of a field by time ``t``."""
    spec.check_field(f)
    return ComplexField(spec.grid, spec.evolve_array(t, f.values))


def apply_J(spec, t, f):
    """Galilean operator ``J(t) f = x f + i t grad f`` (Schrodinger only)."""
    if spec.kind is not PropagatorKind.SCHRODINGER:
        raise UnsupportedCombinationError("J(t) is only defined for the Schrodinger group")
    spec.check_field(f)
    values = spec.grid.x * f.values + 1j * t * spec.gradient_array(f.values)
    return ComplexField(spec.grid, values)


def apply_J_array(spec, times, arr):
    """Vectorised J over a stack ``arr[i]`` at ``times[i]``."""
    if spec.kind is not PropagatorKind.SCHRODINGER:
        raise UnsupportedCombinationError("J(t) is only defined for the Schrodinger group")
    times = np.asarray(times, dtype=float)
    return spec.grid.x * arr + 1j * times[:, None, None] * spec.gradient_array(arr)
