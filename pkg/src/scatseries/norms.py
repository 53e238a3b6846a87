"""Discrete function-space norms: the data norm D and the space-time norms F.

Spatial integrals use the rectangle rule with weight ``dx``; time integrals
use the composite trapezoid rule over the nodes inside the requested interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import ComponentMismatchError, EmptyIntervalError, NonFiniteError, UnsupportedCombinationError
from .propagator import PropagatorSpec, apply_J_array


def lorentzian_coupling(t):
    """Default integrable coupling ``c(t) = 1 / (1 + t^2)``."""
    return 1.0 / (1.0 + np.square(t))


@dataclass(frozen=True)
class StrichartzExponents:
    """Admissible pair (q, r) and the splitting theta + delta = 1.

    ``time_weight`` is only used by the toy model, where the space-time norm
    is weighted by the coupling profile instead of a Lebesgue exponent r.
    """

    p: int
    n: int = 1
    q: Fraction = Fraction(0)
    r: Optional[Fraction] = None
    theta: Fraction = Fraction(0)
    delta: Fraction = Fraction(1)
    time_weight: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def for_power(cls, p, n=1):
        if p % 2 != 1 or p < 3:
            raise ValueError(f"p must be an odd integer >= 3, got {p}")
        if n != 1:
            raise ValueError("only n = 1 is supported")
        if p < 1 + Fraction(4, n):
            raise ValueError(f"p = {p} is below the mass-critical power 1 + 4/n = {1 + Fraction(4, n)}")
        q = Fraction(4 * p + 4, n * (p - 1))
        theta = Fraction(p + 1, p - 1) * Fraction(n * (p - 1) - 4, n * (p - 1))
        return cls(p=p, n=n, q=q, r=Fraction(p + 1), theta=theta, delta=1 - theta)

    @classmethod
    def toy(cls, p, q=8, weight=lorentzian_coupling):
        return cls(p=p, n=0, q=Fraction(q), r=None, theta=Fraction(0), delta=Fraction(1), time_weight=weight)

    @property
    def is_toy(self):
        return self.r is None

    def admissible(self):
        """Check ``2/q = n (1/2 - 1/r)``."""
        return self.is_toy or Fraction(2) / self.q == self.n * (Fraction(1, 2) - 1 / self.r)


@dataclass(frozen=True)
class NormReport:
    d_norm: float
    f1_norm: float
    f2_norm: float
    f3_norm: Optional[float]
    f_norm: float
    restricted_to: tuple

    def as_dict(self):
        return {k: getattr(self, k) for k in ("d_norm", "f1_norm", "f2_norm", "f3_norm", "f_norm")} | {
            "restricted_to": list(self.restricted_to)}


# -- spatial norms ----------------------------------------------------------

def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("norm of a non-finite field")


def _spectral_weights(grid, s):
    return (1.0 + grid.wavenumbers ** 2) ** s


def hs_norm_array(grid, arr, s):
    """H^s norm of the last axis of ``arr`` (Parseval, rectangle quadrature)."""
    hat = np.fft.fft(arr, axis=-1)
    dens = np.abs(hat) ** 2 * _spectral_weights(grid, s)
    return np.sqrt(grid.dx / grid.n * dens.sum(axis=-1))


def l2_norm(f):
    _check_finite(f.values)
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def hs_norm(f, s):
    if f.components != 1:
        raise ComponentMismatchError("hs_norm takes a single-component field")
    _check_finite(f.values)
    return float(hs_norm_array(f.grid, f.values[0], s))


def h1_norm(f):
    """``sqrt(||f||^2 + ||f'||^2)`` with a spectral derivative."""
    if f.components != 1:
        raise ComponentMismatchError("h1_norm takes a single-component field")
    if not f.grid.is_periodic:
        raise UnsupportedCombinationError("h1_norm needs a periodic grid")
    _check_finite(f.values)
    return float(hs_norm_array(f.grid, f.values[0], 1.0))


def d_norm_array(grid, arr):
    """Data norm of ``arr[..., C, n]``: H^1, H^1 x L^2 or Euclidean."""
    if not grid.is_periodic:
        return np.sqrt(np.sum(np.abs(arr) ** 2, axis=(-2, -1)))
    h1 = hs_norm_array(grid, arr[..., 0, :], 1.0)
    if arr.shape[-2] == 1:
        return h1
    v = np.sqrt(grid.dx * np.sum(np.abs(arr[..., 1, :]) ** 2, axis=-1))
    return np.sqrt(h1 ** 2 + v ** 2)


def d_norm(f):
    _check_finite(f.values)
    return float(d_norm_array(f.grid, f.values))


def lr_norm_array(grid, arr, r):
    return (grid.dx * np.sum(np.abs(arr) ** r, axis=-1)) ** (1.0 / r)


def w1r_norm_array(grid, arr, r):
    grad = np.fft.ifft(1j * grid.wavenumbers * np.fft.fft(arr, axis=-1), axis=-1)
    return lr_norm_array(grid, arr, r) + lr_norm_array(grid, grad, r)


# -- space-time norms -------------------------------------------------------

def f2_density(grid, times, snaps, exps):
    """Per-node integrand of ``||f||_{F2}^q`` (before time quadrature)."""
    q = float(exps.q)
    if exps.is_toy:
        if grid.is_periodic:
            raise UnsupportedCombinationError("toy exponents on a periodic grid")
        weight = exps.time_weight(times) if exps.time_weight is not None else np.ones_like(times)
        return weight * np.sqrt(np.sum(np.abs(snaps) ** 2, axis=(-2, -1))) ** q
    if not grid.is_periodic:
        raise UnsupportedCombinationError("Strichartz exponents need a periodic grid")
    return w1r_norm_array(grid, snaps[:, 0, :], float(exps.r)) ** q


def _trapezoid_root(values, times, q):
    if times.size < 2:
        return 0.0
    return float(np.trapezoid(values, times) ** (1.0 / q))


def _restrict(traj, interval):
    t_a, t_b = interval if interval is not None else (traj.times[0], traj.times[-1])
    if not t_b > t_a:
        raise EmptyIntervalError(f"interval [{t_a}, {t_b}] is empty")
    mask = traj.window(t_a, t_b)
    if mask.sum() < 1:
        raise EmptyIntervalError(f"no time node inside [{t_a}, {t_b}]")
    return (float(t_a), float(t_b)), traj.times[mask], traj.snapshots[mask]


def f_norms(traj, interval, exps, with_J=False):
    """Norm report of ``traj`` restricted to ``interval`` (``None`` = all)."""
    bounds, times, snaps = _restrict(traj, interval)
    grid = traj.grid
    if with_J and (not grid.is_periodic or traj.components != 1):
        raise UnsupportedCombinationError("the J-augmented norm exists only for the Schrodinger group")
    if not np.any(snaps):
        zero = 0.0 if with_J else None
        return NormReport(0.0, 0.0, 0.0, zero, 0.0, bounds)

    d_nodes = d_norm_array(grid, snaps)
    f1 = float(np.max(d_nodes))
    q = float(exps.q)
    f2 = _trapezoid_root(f2_density(grid, times, snaps, exps), times, q)
    f3 = None
    total = max(f1, f2)
    if with_J:
        jf = apply_J_array(PropagatorSpec.schrodinger(grid), times, snaps)[:, 0, :]
        sup = float(np.max(np.sqrt(grid.dx * np.sum(np.abs(jf) ** 2, axis=-1))))
        lq = _trapezoid_root(lr_norm_array(grid, jf, float(exps.r)) ** q, times, q)
        f3 = sup + lq
        total = max(total, f3)
    return NormReport(float(d_nodes[0]), f1, f2, f3, total, bounds)


class F2Accumulator:
    """O(1) restricted F2 norms over node ranges via a cumulative trapezoid."""

    def __init__(self, grid, times, snaps, exps):
        self.times = np.asarray(times, dtype=float)
        self.q = float(exps.q)
        dens = f2_density(grid, self.times, snaps, exps)
        seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(self.times)
        self.cumulative = np.concatenate([[0.0], np.cumsum(seg)])

    def norm(self, i, j):
        """F2 norm over nodes ``i..j`` inclusive."""
        return max(self.cumulative[j] - self.cumulative[i], 0.0) ** (1.0 / self.q)


def free_flow_norms(prop, g, times, exps, chunk=512):
    """``(F1, F2)`` of the free flow ``U(t) g`` without storing the trajectory."""
    grid = prop.grid
    f1 = 0.0
    dens = np.empty(times.size)
    for a in range(0, times.size, chunk):
        t = times[a:a + chunk]
        snaps = prop.evolve_array(t, np.broadcast_to(g.values, (t.size,) + g.values.shape))
        f1 = max(f1, float(np.max(d_norm_array(grid, snaps))))
        dens[a:a + chunk] = f2_density(grid, t, snaps, exps)
    return f1, _trapezoid_root(dens, times, float(exps.q))
