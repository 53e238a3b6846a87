"""Experiment recipes run by the command line harness.

Each recipe takes a validated config and returns an :class:`Outcome`; the
runner writes ``summary.json``, one CSV per table and ``run.log``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..consequences import estimate_power, omega_invariance
from ..errors import InconclusiveError, PartitionInfeasibleError
from ..grid import time_nodes
from ..norms import d_norm, free_flow_norms
from ..profiles import random_profile
from ..scattering import default_exponents, horizon_doubling, measure_c_emp, partition_intervals, scatter
from ..taylor import derivative_factor, fd_derivative, hierarchy_series, remainder_order, scatter_plus
from .build import build_field, build_setup, checkpoint_stride
from .output import attach_log, detach_log, metadata, write_summary, write_table

log = logging.getLogger("scatseries.harness")

# Values below this are treated as accumulated round-off when judging dt refinement.
ROUNDOFF_FLOOR = 1e-11


@dataclass
class Outcome:
    summary: dict
    checks: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())


def _setup(config, **kw):
    s = build_setup(config, **kw)
    return s, s.cfg.with_(save_every=checkpoint_stride(s.cfg))


def _background(config, scale=1.0, **kw):
    s, cfg = _setup(config, **kw)
    u_minus = build_field(config.data, s.prop) * scale
    return s, cfg, scatter(s.prop, s.nl, cfg, u_minus, s.thresholds)


def run_scatter(config):
    s, cfg, res = _background(config)
    summary = res.summary()
    summary["conservation_drift"] = res.diagnostics.get("conservation_drift")
    checks = {"boundary_mass": res.boundary_mass_max <= s.thresholds.boundary_mass}
    if s.nl.lam == 0.0:
        gap = d_norm(res.u_plus - res.u_minus)
        summary["identity_gap"] = gap
        checks["identity"] = gap <= 1e-10 * max(d_norm(res.u_minus), 1.0)
    else:
        checks["tails_converged"] = res.converged
    if config.study.doubling:
        shift, _, doubled = horizon_doubling(s.prop, s.nl, cfg, res.u_minus, s.thresholds, base=res)
        summary["doubling_shift"] = shift
        summary["doubled_tail"] = doubled.final_tail
        checks["horizon_doubling"] = shift <= max(res.final_tail, s.thresholds.noise_floor)
    tables = {"tails": (["t", "tail"], res.cauchy_tail.tolist())}
    return Outcome(summary, checks, tables)


def run_hierarchy(config):
    s, cfg, bg = _background(config)
    u0 = build_field(config.perturbation, s.prop)
    K = config.series.K
    exps = default_exponents(s.nl)
    series, _ = hierarchy_series(s.prop, s.nl, cfg, bg.trajectory, u0, K, exps)
    summary = series.summary()
    summary["norm"] = "F" if exps is not None else "sup-D"
    plus_norms = [d_norm(w) for w in series.w_plus]
    rows = [[k, series.f_norms_of_wk[k], plus_norms[k]] for k in range(K + 1)]
    checks = {}
    th = config.thresholds
    if bg.u_minus.is_zero():
        ref = max(series.f_norms_of_wk[0], 1e-300)
        off = [k for k in range(1, K + 1) if k % (s.nl.p - 1)]
        summary["sparsity_ratios"] = {k: series.f_norms_of_wk[k] / ref for k in off}
        checks["sparsity"] = all(series.f_norms_of_wk[k] <= th.sparsity_ratio * ref for k in off)
    elif K >= 3:
        checks["envelope"] = summary["max_positive_residual"] <= th.envelope_residual
    if config.series.fd_check:
        h = config.series.fd_step
        base = bg.u_minus

        def S(eps):
            return scatter_plus(s.prop, s.nl, cfg, base + eps * u0).values

        errs = {}
        for k in range(min(K, 2) + 1):
            deriv = fd_derivative(S, k + 1, h)
            exact = derivative_factor(k) * series.w_plus[k].values
            errs[k] = float(np.linalg.norm(deriv - exact) / max(np.linalg.norm(exact), 1e-300))
        summary["fd_relative_errors"] = errs
        checks["finite_differences"] = all(e <= th.fd_rel_tolerance for e in errs.values())
    return Outcome(summary, checks, {"coefficients": (["k", "f_norm", "d_norm_plus"], rows)})


def run_remainder_order(config):
    s, cfg, bg = _background(config)
    u0 = build_field(config.perturbation, s.prop)
    K = config.series.K
    series, _ = hierarchy_series(s.prop, s.nl, cfg, bg.trajectory, u0, K)
    eps = sorted(config.series.epsilon_list, reverse=True)
    oracle, fits, checks = {}, [], {}
    for k in range(K + 1):
        fit = remainder_order(s.prop, s.nl, cfg, bg.u_minus, u0, k, eps, series, bg.u_plus,
                              config.thresholds.noise_floor, oracle)
        fits.append(fit)
        if not fit.trivial:
            checks[f"slope_K{k}"] = abs(fit.slope - (k + 2)) <= config.thresholds.slope_tolerance
    if s.nl.lam == 0.0:
        checks["trivial"] = all(f.trivial for f in fits)
    summary = {"fits": [f.as_dict() for f in fits], "series": series.summary()}
    rows = [[e] + [f.remainders[i] for f in fits] for i, e in enumerate(eps)]
    return Outcome(summary, checks, {"remainders": (["eps"] + [f"K{k}" for k in range(K + 1)], rows)})


def _pair(config, prop):
    comps = prop.components
    out = []
    for offset in (0, 1):
        seed = config.perturbation.seed + offset
        f = random_profile(prop.grid, config.perturbation.amplitude, config.perturbation.width, seed, comps)
        out.append(f.with_values(f.values.real) if comps == 2 else f)
    return out


def run_omega_invariance(config):
    dt = config.horizon.dt
    th = config.thresholds
    rows, checks = [], {}
    defects = {}
    for step in [dt, dt / 2] + [d for d in config.study.dts if d not in (dt, dt / 2)]:
        s, cfg, bg = _background(config, dt=step)
        v_a, v_b = _pair(config, s.prop)
        rep = omega_invariance(s.prop, s.nl, cfg, bg, v_a, v_b)
        defects[step] = rep.relative_defect
        rows.append([step, rep.relative_defect, rep.value_minus, rep.value_plus])
        log.info("dt=%g defect=%.3e", step, rep.relative_defect)
    checks["defect_dt"] = defects[dt] <= th.omega_defect
    checks["defect_half_dt"] = defects[dt / 2] <= th.omega_defect
    pairs = [(dt, dt / 2)] + list(zip(config.study.dts[:-1], config.study.dts[1:]))
    resolved = [(a, b) for a, b in pairs if defects[a] > ROUNDOFF_FLOOR]
    checks["refinement"] = all(defects[a] >= th.refinement_factor * defects[b] for a, b in resolved)
    summary = {"defects": defects, "roundoff_floor": ROUNDOFF_FLOOR,
               "refinement_pairs": [[a, b] for a, b in resolved],
               "form": "wave" if config.equation == "kg" else "schrodinger"}
    return Outcome(summary, checks, {"omega": (["dt", "relative_defect", "omega_minus", "omega_plus"], rows)})


def run_inverse_scattering(config):
    s, cfg = _setup(config)
    phi = build_field(config.data, s.prop)
    eps = sorted(config.series.epsilon_list, reverse=True)
    rep = estimate_power(s.prop, s.nl, cfg, phi, eps, config.thresholds.noise_floor)
    th = config.thresholds
    checks = {}
    if s.nl.lam != 0.0:
        checks["p_hat"] = abs(rep.p_hat - s.nl.p) <= th.p_tolerance
        checks["born_slope"] = rep.born_residual_slope >= th.born_slope_min
        checks["lambda_hat"] = abs(rep.lambda_hat - s.nl.lam) <= th.lambda_rel_tolerance * abs(s.nl.lam)
    rows = [[e, r, b] for e, r, b in zip(rep.eps_list, rep.residual_norms, rep.born_residuals)]
    return Outcome(rep.as_dict(), checks, {"residuals": (["eps", "residual", "born_residual"], rows)})


def run_norm_audit(config):
    s, _ = _setup(config)
    exps = default_exponents(s.nl)
    if exps is None:
        raise InconclusiveError(f"no Strichartz exponents available for p={config.p}")
    T, dt = config.horizon.T, config.horizon.dt
    rows, checks = [], {}
    worst_shift, worst_unitary = 0.0, 0.0
    for i in range(config.study.corpus):
        data = config.data.model_copy(update={"profile": "random-seeded", "seed": config.data.seed + i})
        g = build_field(data, s.prop)
        gd = d_norm(g)
        f1, f2 = free_flow_norms(s.prop, g, time_nodes(-T, T, dt), exps)
        _, f2h = free_flow_norms(s.prop, g, time_nodes(-T, T, dt / 2), exps)
        c0, c0h = max(f1, f2) / gd, max(f1, f2h) / gd
        worst_shift = max(worst_shift, abs(c0 - c0h) / c0)
        worst_unitary = max(worst_unitary, abs(f1 - gd) / gd)
        rows.append([data.seed, gd, f1, f2, c0, c0h])
    checks["unitary_f1"] = worst_unitary <= 1e-10
    checks["dt_stability"] = worst_shift <= config.thresholds.norm_stability
    summary = {"C0": max(r[4] for r in rows), "worst_dt_shift": worst_shift, "worst_f1_defect": worst_unitary,
               "exponents": {"q": str(exps.q), "r": str(exps.r), "theta": str(exps.theta), "delta": str(exps.delta)}}
    return Outcome(summary, checks, {"norms": (["seed", "d_norm", "f1", "f2", "C0", "C0_half_dt"], rows)})


def run_partition(config):
    horizons = config.study.horizons or [config.horizon.T]
    scales = config.study.scales
    exps = default_exponents(build_setup(config).nl)
    if exps is None:
        raise InconclusiveError(f"no Strichartz exponents available for p={config.p}")
    rows, counts, cs = [], {}, {}
    infeasible = []
    for T in horizons:
        s, cfg, bg = _background(config, horizon=T)
        c, _, _ = measure_c_emp(s.prop, s.nl, bg.trajectory, exps, config.study.probes, config.data.seed)
        cs[T] = c
        for scale in scales:
            traj = bg.trajectory if scale == 1.0 else _background(config, scale, horizon=T)[2].trajectory
            try:
                k = len(partition_intervals(traj, exps, c, s.nl.p))
            except PartitionInfeasibleError as exc:
                log.warning("T=%g scale=%g: %s", T, scale, exc)
                infeasible.append([T, scale])
                k = -1
            counts[(T, scale)] = k
            rows.append([T, scale, k, c])
    checks = {"feasible": not infeasible}
    ordered = sorted(scales, reverse=True)
    checks["monotone_in_scale"] = all(
        counts[(T, a)] >= counts[(T, b)] for T in horizons for a, b in zip(ordered[:-1], ordered[1:])
        if counts[(T, a)] > 0 and counts[(T, b)] > 0)
    if len(horizons) > 1:
        vals = np.array(list(cs.values()))
        checks["c_emp_stable_in_T"] = bool(vals.min() > 0 and vals.max() / vals.min() <= 1.25)
        checks["count_stable_in_T"] = all(len({counts[(T, sc)] for T in horizons}) == 1 for sc in scales)
    summary = {"c_emp": cs, "counts": {f"T={T},scale={sc}": k for (T, sc), k in counts.items()},
               "infeasible": infeasible}
    return Outcome(summary, checks, {"partition": (["T", "scale", "K", "c_emp"], rows)})


RECIPES = {
    "scatter": (run_scatter, "approximate S(u_minus) with Cauchy tails and boundary-mass checks",
                "evolve, scattering"),
    "hierarchy": (run_hierarchy, "Taylor coefficients w_k^+ with growth fit and optional FD check",
                  "nonlinearity, taylor"),
    "remainder-order": (run_remainder_order, "slopes of the truncated-series remainder against eps", "taylor"),
    "omega-invariance": (run_omega_invariance, "skew-form invariance of the linearised map under dt refinement",
                         "scattering, consequences"),
    "inverse-scattering": (run_inverse_scattering, "recover p and lambda from small-data scattering",
                           "consequences"),
    "norm-audit": (run_norm_audit, "free-flow F-norm constants over a random corpus", "state-core, propagator"),
    "partition-diagnostic": (run_partition, "empirical constant and interval counts for the contraction bound",
                             "scattering"),
}


def run_experiment(name, config, output_dir=None):
    """Run recipe ``name`` and write its outputs; returns the :class:`Outcome`."""
    if name not in RECIPES:
        raise KeyError(f"unknown experiment '{name}'; choose from {', '.join(RECIPES)}")
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    handler = attach_log(out / "run.log")
    start = time.perf_counter()
    try:
        log.info("experiment %s, config %s", name, config.digest())
        outcome = RECIPES[name][0](config)
        meta = metadata(config, {"experiment": name})
        for table, (columns, rows) in outcome.tables.items():
            write_table(out / f"{table}.csv", columns, rows, meta)
        summary = {"experiment": name, "passed": outcome.passed, "checks": outcome.checks,
                   "results": outcome.summary, "config": config.canonical(), "metadata": meta,
                   "elapsed_seconds": time.perf_counter() - start}
        write_summary(out / "summary.json", summary)
        for check, ok in outcome.checks.items():
            log.info("check %s: %s", check, "pass" if ok else "FAIL")
        return outcome
    finally:
        detach_log(handler)
