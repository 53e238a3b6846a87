"""Spatial grids, sampled fields and time trajectories.

Fields are stored as complex arrays of shape ``(components, n)`` where ``n`` is
the number of grid points (periodic grid) or the dimension ``d`` (toy vector
model).  Trajectories stack them along a leading time axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ComponentMismatchError, GridMismatchError, NonFiniteError


class GridKind(enum.Enum):
    PERIODIC_1D = "periodic1d"
    TOY_VECTOR = "toy"


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic 1D box ``[-L/2, L/2)`` with ``N`` points, or the toy space C^d."""

    kind: GridKind
    length: float = 0.0
    points: int = 0

    def __post_init__(self):
        if self.kind is GridKind.PERIODIC_1D:
            n = int(self.points)
            if n < 8 or n & (n - 1):
                raise ValueError(f"periodic grid needs N >= 8 and a power of two, got {self.points}")
            if not self.length > 0:
                raise ValueError(f"box length must be positive, got {self.length}")
        elif self.points < 1:
            raise ValueError(f"toy dimension must be >= 1, got {self.points}")

    @classmethod
    def periodic(cls, length, points):
        return cls(GridKind.PERIODIC_1D, float(length), int(points))

    @classmethod
    def toy(cls, dim):
        return cls(GridKind.TOY_VECTOR, 0.0, int(dim))

    @property
    def is_periodic(self):
        return self.kind is GridKind.PERIODIC_1D

    @property
    def n(self):
        return self.points

    @property
    def dx(self):
        """Quadrature weight of one sample (1 for the toy model)."""
        return self.length / self.points if self.is_periodic else 1.0

    @cached_property
    def x(self):
        """Sawtooth coordinate centred at 0 (toy: component index)."""
        if not self.is_periodic:
            return np.arange(self.points, dtype=float)
        return -0.5 * self.length + self.dx * np.arange(self.points)

    @cached_property
    def wavenumbers(self):
        """``2*pi*m/L`` in standard FFT ordering, ``m`` in ``[-N/2, N/2)``."""
        if not self.is_periodic:
            raise GridMismatchError("toy grids have no wavenumbers")
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)

    def describe(self):
        if self.is_periodic:
            return {"kind": self.kind.value, "L": self.length, "N": self.points}
        return {"kind": self.kind.value, "d": self.points}


def _as_values(grid, values, components=None):
    arr = np.array(values, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[-1] != grid.n:
        raise GridMismatchError(f"values of shape {arr.shape} do not fit a grid with n={grid.n}")
    if components is not None and arr.shape[0] != components:
        raise ComponentMismatchError(f"expected {components} components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("field contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Immutable sampled field, ``values.shape == (components, n)``."""

    grid: SpatialGrid
    values: np.ndarray
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        arr = _as_values(self.grid, self.values)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid, components=1):
        return cls(grid, np.zeros((components, grid.n), dtype=complex))

    @classmethod
    def from_function(cls, grid, *funcs):
        """Sample one callable per component on ``grid.x``."""
        return cls(grid, np.stack([np.asarray(f(grid.x), dtype=complex) * np.ones(grid.n) for f in funcs]))

    @property
    def components(self):
        return self.values.shape[0]

    def with_values(self, values):
        return ComplexField(self.grid, values)

    def same_layout(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")
        if other.components != self.components:
            raise ComponentMismatchError(
                f"component counts differ: {self.components} vs {other.components}")

    def _coerce(self, other):
        if isinstance(other, ComplexField):
            self.same_layout(other)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def is_zero(self):
        return not np.any(self.values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled time history on a fixed grid.

    ``snapshots[i]`` is the state at ``times[i]``; ``diagnostics`` holds
    solver-side bookkeeping (conservation records, scheme, ...).
    """

    grid: SpatialGrid
    times: np.ndarray
    snapshots: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        snaps = np.asarray(self.snapshots, dtype=complex)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1D array")
        if snaps.ndim != 3 or snaps.shape[0] != times.size or snaps.shape[2] != self.grid.n:
            raise GridMismatchError(
                f"snapshots of shape {snaps.shape} inconsistent with {times.size} times on n={self.grid.n}")
        if times.size > 1:
            steps = np.diff(times)
            h = (times[-1] - times[0]) / (times.size - 1)
            if h <= 0 or np.max(np.abs(steps - h)) > 1e-12 * max(abs(h), np.max(np.abs(times))):
                raise ValueError("trajectory times must be strictly increasing and uniform")
        if not np.all(np.isfinite(snaps)):
            raise NonFiniteError("trajectory contains NaN or Inf")
        times.flags.writeable = False
        snaps.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "snapshots", snaps)

    @property
    def dt(self):
        if self.times.size < 2:
            return 0.0
        return (self.times[-1] - self.times[0]) / (self.times.size - 1)

    @property
    def components(self):
        return self.snapshots.shape[1]

    def __len__(self):
        return self.times.size

    def field(self, i):
        return ComplexField(self.grid, self.snapshots[i])

    @property
    def first(self):
        return self.field(0)

    @property
    def last(self):
        return self.field(-1)

    def index_of(self, t, tol=1e-9):
        """Index of the node at time ``t``; raises if ``t`` is not a node."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(self.dt)):
            raise GridMismatchError(f"t={t} is not a node of the trajectory")
        return i

    def window(self, t_a, t_b):
        """Boolean mask of the nodes inside ``[t_a, t_b]``."""
        slack = 1e-9 * max(abs(self.dt), 1e-300)
        return (self.times >= t_a - slack) & (self.times <= t_b + slack)

    def scaled(self, factor):
        return Trajectory(self.grid, self.times, self.snapshots * factor, dict(self.diagnostics))

    @classmethod
    def zeros(cls, grid, times, components=1):
        times = np.asarray(times, dtype=float)
        return cls(grid, times, np.zeros((times.size, components, grid.n), dtype=complex))


def time_nodes(t_start, t_end, dt):
    """Uniform nodes from ``t_start`` to ``t_end``; ``dt`` must divide the span."""
    span = t_end - t_start
    steps = span / dt
    m = int(round(steps))
    if m < 1 or abs(steps - m) > 1e-9 * max(1.0, steps):
        raise ValueError(f"dt={dt} does not divide the interval [{t_start}, {t_end}]")
    return t_start + (span / m) * np.arange(m + 1)
