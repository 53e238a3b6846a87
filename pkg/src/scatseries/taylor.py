"""Taylor hierarchy of the scattering map and its summation.

Writing ``S(ubar_minus + eps u0) = ubar_plus + sum_k eps^(k+1) w_k^+``, the
coefficient ``w_k^+`` is ``1/(k+1)!`` times the ``(k+1)``-th derivative of
``eps -> S(ubar_minus + eps u0)`` at ``eps = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconclusiveError, OutOfRadiusError
from .evolve import background_deviation, integrate_jet, solve_nonlinear
from .grid import ComplexField
from .nonlinearity import JetPlan
from .norms import d_norm, d_norm_array, f_norms

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SeriesResult:
    w_plus: list
    f_norms_of_wk: np.ndarray
    growth_Lambda: float
    radius_estimate: float
    fit_intercept: float = float("nan")
    fit_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    remainder_orders: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self):
        return len(self.w_plus) - 1

    def summary(self):
        return {
            "K": self.order,
            "f_norms_of_wk": self.f_norms_of_wk.tolist(),
            "growth_Lambda": self.growth_Lambda,
            "radius_estimate": self.radius_estimate,
            "fit_intercept": self.fit_intercept,
            "max_positive_residual": float(np.max(self.fit_residuals, initial=0.0)),
            "remainder_orders": self.remainder_orders,
        }


def build_hierarchy(prop, nl, cfg, background, u0, K):
    """Trajectories ``w_0 ... w_K`` along ``background`` (which starts at ``-T``).

    ``w_0(-T) = U(-T) u0`` and ``w_m(-T) = 0`` for ``m >= 1``; every ``w_m`` is
    driven by the multilinear forms of lower-order coefficients.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    prop.check_field(u0)
    plan = JetPlan.build(K, nl.p)
    _check_plan(plan)
    t0 = float(background.times[0])
    w_inits = np.zeros((K + 1,) + u0.values.shape, dtype=complex)
    w_inits[0] = prop.evolve_array(t0, u0.values)
    recomputed, coeffs = integrate_jet(prop, nl, cfg, background.snapshots[0], w_inits, t0,
                                       float(background.times[-1]))
    dev = background_deviation(background, recomputed)
    for w in coeffs:
        w.diagnostics["background_deviation"] = dev
    return coeffs


def _check_plan(plan):
    """Every explicit source term of ``w_m`` only uses ``w_l`` with ``l <= m - 1``."""
    for m, j, ells, _ in plan.tuples:
        if j < 2 or (ells and max(ells) > m - 1) or j + sum(ells) != m + 1:
            raise AssertionError(f"hierarchy bookkeeping broken at m={m}, j={j}, l={ells}")


def fit_growth(norms, k_min=1):
    """Least-squares ``log ||w_k|| ~ k log(Lambda) + b`` over ``k >= k_min``.

    Coefficients that vanish (to 1e-300) are skipped.  Returns
    ``(Lambda, intercept, residuals)``, with NaNs if fewer than two points survive.
    """
    ks = np.arange(len(norms))
    keep = (ks >= k_min) & (np.asarray(norms) > 1e-300)
    if keep.sum() < 2:
        return float("nan"), float("nan"), np.zeros(0)
    slope, intercept = np.polyfit(ks[keep], np.log(np.asarray(norms)[keep]), 1)
    resid = np.log(np.asarray(norms)[keep]) - (slope * ks[keep] + intercept)
    return float(np.exp(slope)), float(intercept), resid


def hierarchy_series(prop, nl, cfg, background, u0, K, exps=None):
    """Outgoing coefficients ``w_k^+ = U(-T) w_k(T)`` with norms and the growth fit."""
    coeffs = build_hierarchy(prop, nl, cfg, background, u0, K)
    T = float(background.times[-1])
    w_plus = [ComplexField(prop.grid, prop.evolve_array(-T, w.snapshots[-1])) for w in coeffs]
    if exps is None:
        norms = np.array([float(np.max(d_norm_array(prop.grid, w.snapshots))) for w in coeffs])
    else:
        norms = np.array([f_norms(w, None, exps).f_norm for w in coeffs])
    lam, intercept, resid = fit_growth(norms)
    radius = 1.0 / lam if lam == lam and lam > 0 else float("inf")
    diag = {"background_deviation": coeffs[0].diagnostics.get("background_deviation")}
    return SeriesResult(w_plus, norms, lam, radius, intercept, resid, [], diag), coeffs


def sum_series(series, ubar_plus, eps, K=None, force=False):
    """Partial sum ``ubar_plus + eps * sum_{k<=K} eps^k w_k^+``."""
    K = series.order if K is None else K
    if K > series.order:
        raise ValueError(f"only {series.order + 1} coefficients available, K={K} requested")
    lam = series.growth_Lambda
    outside = lam == lam and abs(eps) * lam >= 1.0
    if outside and not force:
        raise OutOfRadiusError(eps, series.radius_estimate)
    total = ubar_plus.values.astype(complex)
    for k in range(K, -1, -1):
        total = total + eps ** (k + 1) * series.w_plus[k].values
    tags = frozenset({"out_of_radius"}) if outside else frozenset()
    return ComplexField(ubar_plus.grid, total, tags)


def scatter_plus(prop, nl, cfg, u_minus):
    """``U(-T) u(T)`` for the flow started at ``U(-T) u_minus`` (no diagnostics)."""
    T = cfg.horizon
    start = ComplexField(prop.grid, prop.evolve_array(-T, u_minus.values))
    traj = solve_nonlinear(prop, nl, cfg.with_(save_every=round(2 * T / cfg.dt)), start, -T, T)
    return ComplexField(prop.grid, prop.evolve_array(-T, traj.snapshots[-1]))


@dataclass(frozen=True)
class RemainderFit:
    K: int
    eps: np.ndarray
    remainders: np.ndarray
    slope: float
    trivial: bool = False

    def as_dict(self):
        return {"K": self.K, "eps": self.eps.tolist(), "remainders": self.remainders.tolist(),
                "slope": self.slope, "trivial": self.trivial}


def remainder_order(prop, nl, cfg, ubar_minus, u0, K, eps_list, series=None, ubar_plus=None,
                    noise_floor=1e-13, oracle=None):
    """Slope of ``log ||S(ubar_minus + eps u0) - partial sum_K||_D`` against ``log eps``.

    ``oracle`` may hold precomputed ``{eps: S(ubar_minus + eps u0)}`` values to
    share nonlinear solves between several ``K``.
    """
    eps_list = np.asarray(eps_list, dtype=float)
    if series is None or ubar_plus is None:
        from .scattering import scatter

        base = scatter(prop, nl, cfg, ubar_minus)
        ubar_plus = base.u_plus
        series, _ = hierarchy_series(prop, nl, cfg, base.trajectory, u0, K)
    oracle = {} if oracle is None else oracle
    rems = []
    for eps in eps_list:
        if eps not in oracle:
            oracle[eps] = scatter_plus(prop, nl, cfg, ubar_minus + eps * u0)
        partial = sum_series(series, ubar_plus, eps, K, force=True)
        rems.append(d_norm(oracle[eps] - partial))
    rems = np.array(rems)
    floor = noise_floor * max(d_norm(ubar_plus), d_norm(u0), 1.0)
    if nl.lam == 0.0 or np.all(rems <= floor):
        if nl.lam == 0.0:
            return RemainderFit(K, eps_list, rems, float("nan"), trivial=True)
        raise InconclusiveError(f"all remainders are below the noise floor {floor:.3g}; use larger eps")
    if np.any(rems < 10 * floor):
        raise InconclusiveError(
            f"smallest remainder {rems.min():.3g} is within 10x of the noise floor {floor:.3g}; "
            "use larger eps or a finer step")
    slope = float(np.polyfit(np.log(eps_list), np.log(rems), 1)[0])
    return RemainderFit(K, eps_list, rems, slope)


# -- finite-difference derivatives of eps -> S(ubar + eps u0) -----------------

_STENCILS = {
    1: (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0),
    2: (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0),
    3: (np.array([-3, -2, -1, 1, 2, 3]), np.array([1, -8, 13, -13, 8, -1]) / 8.0),
}


def fd_derivative(func, order, h):
    """Fourth-order central difference of ``func`` (array-valued) at 0."""
    offsets, weights = _STENCILS[order]
    vals = [func(o * h) for o in offsets]
    return sum(w * v for w, v in zip(weights, vals)) / h ** order


def derivative_factor(k):
    """``(k+1)!``: maps ``w_k^+`` to the ``(k+1)``-th derivative of S."""
    return math.factorial(k + 1)
