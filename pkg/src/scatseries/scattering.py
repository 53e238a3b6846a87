"""Finite-horizon scattering: asymptotic states, Cauchy tails, linearised S.

The state at ``-T`` is prescribed as ``U(-T) u_minus`` and the outgoing state
is read off as ``U(-T) u(T)``.  The error committed by truncating the horizon
is made observable through the Cauchy tails of the profile
``P(t) = U(-t) u(t)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PartitionInfeasibleError, TaintedResultError
from .evolve import integrate_jet, solve_nonlinear
from .grid import ComplexField, SpatialGrid, Trajectory
from .nonlinearity import JetPlan, homogeneous_parts
from .profiles import random_field
from .propagator import PropagatorSpec
from .norms import F2Accumulator, StrichartzExponents, d_norm, d_norm_array, f2_density, f_norms

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScatterThresholds:
    tail: float = 1e-4
    boundary_mass: float = 1e-6
    noise_floor: float = 1e-13
    boundary_fraction: float = 0.1


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    u_minus: ComplexField
    u_at_zero: ComplexField
    u_plus: ComplexField
    horizon: float
    cauchy_tail: np.ndarray
    boundary_mass_max: float
    norm_table: Optional[object]
    converged: bool
    trajectory: Trajectory
    tainted: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_tail(self):
        return float(self.cauchy_tail[-1, 1])

    def summary(self):
        return {
            "horizon": self.horizon,
            "converged": self.converged,
            "tainted": self.tainted,
            "final_tail": self.final_tail,
            "cauchy_tail": self.cauchy_tail.tolist(),
            "boundary_mass_max": self.boundary_mass_max,
            "norms": None if self.norm_table is None else self.norm_table.as_dict(),
        }


def default_exponents(nl):
    """Exponents used for the F-norms of a given nonlinearity (``None`` if unavailable)."""
    if nl.is_toy:
        return StrichartzExponents.toy(nl.p, weight=nl.coupling)
    try:
        return StrichartzExponents.for_power(nl.p)
    except ValueError:
        return None


def boundary_mass_fraction(grid, snaps, fraction=0.1):
    """Largest share of ``sum |components|^2`` found in the outer ``fraction`` of the box."""
    if not grid.is_periodic:
        return 0.0
    outer = np.abs(grid.x) >= (0.5 - fraction / 2) * grid.length
    dens = np.sum(np.abs(snaps) ** 2, axis=-2)
    total = dens.sum(axis=-1)
    share = np.divide(dens[..., outer].sum(axis=-1), total, out=np.zeros_like(total), where=total > 0)
    return float(np.max(share))


def cauchy_tails(prop, traj, horizon, checkpoints=(0.25, 0.5, 1.0)):
    """Two-sided tails ``||P(t) - P(t/2)|| + ||P(-t/2) - P(-t)||`` at ``t = c * T``.

    Checkpoints that miss the saved nodes snap to the nearest one.
    """
    rows = []
    times = traj.times
    for c in checkpoints:
        idx = [int(np.argmin(np.abs(times - s))) for s in (c * horizon, c * horizon / 2, -c * horizon / 2, -c * horizon)]
        t = float(times[idx[0]])
        prof = prop.evolve_array(-traj.times[idx], traj.snapshots[idx])
        gaps = d_norm_array(prop.grid, np.stack([prof[0] - prof[1], prof[2] - prof[3]]))
        rows.append((t, float(gaps.sum())))
    return np.array(rows)


def tails_converged(tails, scale, thresholds):
    vals = np.where(tails[:, 1] <= thresholds.noise_floor * max(scale, 1.0), 0.0, tails[:, 1])
    decreasing = all(b < a or (a == 0.0 and b == 0.0) for a, b in zip(vals[:-1], vals[1:]))
    return bool(decreasing and vals[-1] <= thresholds.tail * scale)


def scatter(prop, nl, cfg, u_minus, thresholds=ScatterThresholds(), exps=None, raise_on_taint=True):
    """Approximate ``S u_minus`` on the horizon ``[-T, T]`` of ``cfg``."""
    prop.check_field(u_minus)
    T = cfg.horizon
    u_start = ComplexField(prop.grid, prop.evolve_array(-T, u_minus.values))
    traj = solve_nonlinear(prop, nl, cfg, u_start, -T, T)
    u_plus = ComplexField(prop.grid, prop.evolve_array(-T, traj.snapshots[-1]))
    u_zero = traj.field(traj.index_of(0.0))

    tails = cauchy_tails(prop, traj, T)
    bmass = boundary_mass_fraction(prop.grid, traj.snapshots, thresholds.boundary_fraction)
    scale = d_norm(u_minus)
    converged = tails_converged(tails, scale, thresholds)
    exps = default_exponents(nl) if exps is None else exps
    norms = f_norms(traj, None, exps) if exps is not None else None
    diag = dict(traj.diagnostics)
    diag["grid"] = prop.grid.describe()
    tainted = bmass > thresholds.boundary_mass
    result = ScatteringResult(u_minus, u_zero, u_plus, T, tails, bmass, norms, converged and not tainted,
                              traj, tainted, diag)
    if tainted and raise_on_taint:
        raise TaintedResultError(
            f"boundary mass fraction {bmass:.3g} exceeds {thresholds.boundary_mass:.3g}; "
            "enlarge the box or shorten the horizon", result.summary())
    return result


def linearized_scatter(prop, nl, cfg, background, v_minus):
    """``dS(u_minus)[v_minus]`` by a tangent solve along the background.

    ``v_minus`` may also be a sequence of fields; they then share one
    integration and a list is returned.
    """
    single = isinstance(v_minus, ComplexField)
    vs = [v_minus] if single else list(v_minus)
    if background.tainted:
        raise TaintedResultError("background is tainted", background.summary())
    if not background.converged:
        log.warning("linearising around a background whose tails did not converge")
    for v in vs:
        prop.check_field(v)
    T = background.horizon
    w0 = prop.evolve_array(-T, np.stack([v.values for v in vs]))
    _, ws = integrate_jet(prop, nl, cfg.with_(save_every=round(2 * T / cfg.dt)),
                          background.trajectory.snapshots[0], w0, -T, T,
                          plan=JetPlan.tangents(len(vs), nl.p))
    out = [ComplexField(prop.grid, prop.evolve_array(-T, w.snapshots[-1])) for w in ws]
    return out[0] if single else out


def horizon_doubling(prop, nl, cfg, u_minus, thresholds=ScatterThresholds(), base=None):
    """Compare ``u_plus`` at horizon ``T`` with the run at ``2T`` (box doubled too).

    Returns ``(shift, base_result, doubled_result)`` where ``shift`` is the
    D-norm change of ``u_plus`` on the original box.
    """
    base = scatter(prop, nl, cfg, u_minus, thresholds) if base is None else base
    grid = prop.grid
    if grid.is_periodic:
        big = SpatialGrid.periodic(2 * grid.length, 2 * grid.n)
        pad = np.zeros((prop.components, big.n), dtype=complex)
        lo = grid.n // 2
        pad[:, lo:lo + grid.n] = u_minus.values
        big_prop = PropagatorSpec(prop.kind, big, prop.toy_frequencies, prop.kg_mass)
        big_u = ComplexField(big, pad)
    else:
        big_prop, big_u, lo = prop, u_minus, 0
    doubled = scatter(big_prop, nl, cfg.with_(horizon=2 * cfg.horizon), big_u, thresholds)
    restricted = doubled.u_plus.values[:, lo:lo + grid.n]
    shift = float(d_norm(ComplexField(grid, restricted - base.u_plus.values)))
    return shift, base, doubled


# -- interval partition ------------------------------------------------------

def tangent_action(nl, times, ubar, v, chunk=256):
    """``Phi_1(ubar(t))[v(t)]`` node by node for stacks ``(M, C, n)``."""
    out = np.empty_like(v)
    for a in range(0, times.size, chunk):
        sl = slice(a, a + chunk)
        out[sl] = homogeneous_parts(nl, times[sl], ubar[sl], v[sl])[1]
    return out


def restricted_duhamel(prop, nl, traj, v_snaps, i, j):
    """``N_1(ubar, v)`` with the time integral started at node ``i``, on nodes ``i..j``."""
    times = traj.times[i:j + 1]
    src = tangent_action(nl, times, traj.snapshots[i:j + 1], v_snaps[i:j + 1])
    prof = prop.evolve_array(-times, src)
    steps = np.diff(times)[:, None, None]
    cum = np.concatenate([np.zeros_like(prof[:1]), np.cumsum(0.5 * steps * (prof[1:] + prof[:-1]), axis=0)])
    return times, prop.evolve_array(times, cum)


def _f_norm_nodes(grid, times, snaps, exps):
    f1 = float(np.max(d_norm_array(grid, snaps)))
    if times.size < 2:
        return f1
    f2 = float(np.trapezoid(f2_density(grid, times, snaps, exps), times) ** (1.0 / float(exps.q)))
    return max(f1, f2)


def measure_c_emp(prop, nl, background, exps, probes=32, seed=0, min_nodes=8):
    """Least-squares constant of the j = 1 multilinear estimate over random probes.

    Each probe draws a random interval and a random free solution ``v = U(t) g``
    and records ``y = ||1_I N_1(ubar, v)||_F`` against
    ``x = ||1_I ubar||_F2^delta ||ubar||_F^(p-1-delta) ||v||_F``.
    Interval endpoints are uniform in the time measure of the F2 norm (the
    coupling weight on the toy model, Lebesgue otherwise), so the probe
    distribution does not drift as the horizon grows.  Returns ``(C_emp, x, y)``.
    """
    rng = np.random.default_rng(seed)
    grid = prop.grid
    times, snaps = background.times, background.snapshots
    acc = F2Accumulator(grid, times, snaps, exps)
    delta = float(exps.delta)
    total_f = _f_norm_nodes(grid, times, snaps, exps)
    xs, ys = [], []
    m = times.size
    if m < min_nodes + 1:
        raise ValueError(f"background has {m} nodes, need more than {min_nodes}")
    weight = exps.time_weight(times) if exps.time_weight is not None else np.ones_like(times)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (weight[1:] + weight[:-1]) * np.diff(times))])
    for _ in range(probes):
        a, b = np.sort(rng.uniform(0.0, cum[-1], size=2))
        i = min(int(np.searchsorted(cum, a)), m - min_nodes)
        j = min(max(int(np.searchsorted(cum, b)), i + min_nodes - 1), m - 1)
        g = random_field(grid, prop.components, rng)
        v = prop.evolve_array(times, np.broadcast_to(g, (m,) + g.shape))
        t_i, n1 = restricted_duhamel(prop, nl, background, v, i, j)
        ys.append(_f_norm_nodes(grid, t_i, n1, exps))
        v_norm = _f_norm_nodes(grid, times, v, exps)
        xs.append(acc.norm(i, j) ** delta * total_f ** (nl.p - 1 - delta) * v_norm)
    xs, ys = np.array(xs), np.array(ys)
    denom = float(np.dot(xs, xs))
    c = float(np.dot(xs, ys) / denom) if denom > 0 else 0.0
    return c, xs, ys


def partition_intervals(background, exps, c_emp, p):
    """Greedy maximal intervals with ``C ||1_I ubar||_F2^delta ||ubar||_F^(p-1-delta) <= 1/2``."""
    grid = background.grid
    times, snaps = background.times, background.snapshots
    if not np.any(snaps) or c_emp == 0.0:
        return [(float(times[0]), float(times[-1]))]
    delta = float(exps.delta)
    total_f = _f_norm_nodes(grid, times, snaps, exps)
    acc = F2Accumulator(grid, times, snaps, exps)
    factor = c_emp * total_f ** (p - 1 - delta)

    def ok(i, j):
        return factor * acc.norm(i, j) ** delta <= 0.5

    intervals = []
    i, last = 0, times.size - 1
    while i < last:
        if not ok(i, i + 1):
            raise PartitionInfeasibleError(
                f"a single step at t={times[i]:.4g} already violates the contraction bound; "
                "C_emp is too coarse or the background too large")
        lo, hi = i + 1, last
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if ok(i, mid):
                lo = mid
            else:
                hi = mid - 1
        intervals.append((float(times[i]), float(times[lo])))
        i = lo
    return intervals
