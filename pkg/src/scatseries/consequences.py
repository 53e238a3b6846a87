"""Checkable by-products of the scattering map.

* skew forms and their invariance under the linearised scattering map,
* the Born term of ``S`` near the origin,
* recovery of the power ``p`` and coupling ``lam`` from scattering data.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ComponentMismatchError, InconclusiveError
from .grid import ComplexField, time_nodes
from .norms import d_norm, hs_norm_array
from .scattering import linearized_scatter
from .taylor import scatter_plus


class FormKind(enum.Enum):
    SCHRODINGER = "schrodinger"
    WAVE = "wave"


def omega(kind, f, g):
    """Skew form: ``Im int conj(f) g`` or ``int (f_u g_v - g_u f_v)``."""
    kind = FormKind(kind)
    f.same_layout(g)
    w = f.grid.dx
    if kind is FormKind.SCHRODINGER:
        if f.components != 1:
            raise ComponentMismatchError("the Schrodinger form takes single-component fields")
        return float(w * np.sum(np.conj(f.values[0]) * g.values[0]).imag)
    if f.components != 2:
        raise ComponentMismatchError("the wave form takes (u, du/dt) pairs")
    a, b = f.values, g.values
    return float(w * np.sum(a[0] * b[1] - b[0] * a[1]).real)


@dataclass(frozen=True)
class OmegaReport:
    form_kind: FormKind
    value_minus: float
    value_plus: float
    relative_defect: float

    def as_dict(self):
        return {"form_kind": self.form_kind.value, "value_minus": self.value_minus,
                "value_plus": self.value_plus, "relative_defect": self.relative_defect}


def form_for(prop):
    return FormKind.WAVE if prop.components == 2 else FormKind.SCHRODINGER


def omega_invariance(prop, nl, cfg, background, v_a, v_b, kind=None):
    """Compare ``omega(dS v_a, dS v_b)`` with ``omega(v_a, v_b)``."""
    kind = form_for(prop) if kind is None else FormKind(kind)
    plus_a, plus_b = linearized_scatter(prop, nl, cfg, background, [v_a, v_b])
    before = omega(kind, v_a, v_b)
    after = omega(kind, plus_a, plus_b)
    scale = d_norm(v_a) * d_norm(v_b)
    defect = abs(after - before) / scale if scale > 0 else 0.0
    return OmegaReport(kind, before, after, defect)


# -- Born term and inverse scattering ---------------------------------------

def born_term(prop, nl, phi, horizon, dt, chunk=256):
    """``int_{-T}^{T} U(-t) Phi_1(t, U(t) phi) dt`` by the trapezoid rule.

    ``Phi_1`` is the nonlinearity with unit coupling, so that
    ``S(eps phi) = eps phi + lam eps^p B + O(eps^(2p-1))``.
    """
    unit = nl.with_lam(1.0)
    times = time_nodes(-horizon, horizon, dt)
    weights = np.full(times.size, dt)
    weights[[0, -1]] = dt / 2
    total = np.zeros_like(phi.values)
    for a in range(0, times.size, chunk):
        t = times[a:a + chunk]
        free = prop.evolve_array(t, np.broadcast_to(phi.values, (t.size,) + phi.values.shape))
        pulled = prop.evolve_array(-t, unit.evaluate(t, free))
        total += np.tensordot(weights[a:a + chunk], pulled, axes=(0, 0))
    return ComplexField(phi.grid, total)


def residual_norm(grid, arr, s):
    """Norm used for residuals: ``H^s`` of the first component, Euclidean on the toy."""
    if not grid.is_periodic:
        return float(np.sqrt(np.sum(np.abs(arr) ** 2)))
    return float(hs_norm_array(grid, arr[0], s))


def critical_index(p, n=1):
    """``n/2 - 2/(p-1)``."""
    return n / 2 - 2 / (p - 1)


@dataclass(frozen=True, eq=False)
class InverseScatteringReport:
    eps_list: np.ndarray
    residual_norms: np.ndarray
    p_hat: float
    lambda_hat: float
    born_residual_slope: float
    born_residuals: np.ndarray
    extra: dict = field(default_factory=dict)
    born: ComplexField = None
    residual_fields: list = field(default_factory=list)

    def as_dict(self):
        return {"eps_list": self.eps_list.tolist(), "residual_norms": self.residual_norms.tolist(),
                "p_hat": self.p_hat, "lambda_hat": self.lambda_hat,
                "born_residual_slope": self.born_residual_slope,
                "born_residuals": self.born_residuals.tolist(), **self.extra}


def _check_geometric(eps_list):
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 2 or np.any(eps <= 0):
        raise ValueError("eps_list needs at least two positive values")
    ratios = eps[:-1] / eps[1:]
    if np.any(ratios < np.sqrt(2) * (1 - 1e-9)) or np.ptp(ratios) > 1e-9 * ratios.max():
        raise ValueError("eps_list must be geometric (decreasing) with ratio >= sqrt(2)")
    return eps


def _slope(eps, vals):
    return float(np.polyfit(np.log(eps), np.log(vals), 1)[0])


def estimate_power(prop, nl, cfg, phi, eps_list, noise_floor=1e-13, born_dt=None):
    """Fit ``p`` from ``||S(eps phi) - eps phi||`` and test the Born term."""
    eps = _check_geometric(eps_list)
    grid = prop.grid
    s = critical_index(nl.p) if grid.is_periodic else 0.0
    born = born_term(prop, nl, phi, cfg.horizon, cfg.dt if born_dt is None else born_dt)
    residuals, fields = [], []
    for e in eps:
        r = scatter_plus(prop, nl, cfg, e * phi).values - e * phi.values
        fields.append(r)
        residuals.append(residual_norm(grid, r, s))
    residuals = np.array(residuals)
    extra = {"norm_index": s}
    if grid.is_periodic:
        extra["residual_norms_l2"] = [residual_norm(grid, r, 0.0) for r in fields]
        extra["residual_norms_h1"] = [residual_norm(grid, r, 1.0) for r in fields]

    floor = noise_floor * max(eps) * max(residual_norm(grid, phi.values, s), 1.0)
    if nl.lam == 0.0 or np.any(residuals <= floor):
        nan = float("nan")
        extra["p_hat_status"] = "undefined: residuals at the noise floor"
        return InverseScatteringReport(eps, residuals, nan, nan, nan, np.full(eps.size, nan), extra, born, fields)

    p_hat = _slope(eps, residuals)
    born_res = np.array([residual_norm(grid, r - nl.lam * e ** nl.p * born.values, s)
                         for e, r in zip(eps, fields)])
    born_slope = _slope(eps, born_res) if np.all(born_res > floor) else float("nan")
    report = InverseScatteringReport(eps, residuals, p_hat, float("nan"), born_slope, born_res, extra, born, fields)
    lam_hat = estimate_lambda(report, phi, prop, nl)
    extra["p_hat_without_largest_eps"] = _slope(eps[1:], residuals[1:]) if eps.size > 2 else float("nan")
    return InverseScatteringReport(eps, residuals, p_hat, lam_hat, born_slope, born_res, extra, born, fields)


def estimate_lambda(report, phi, prop, nl_shape):
    """Closed-form least squares for ``lam`` in ``S(eps phi) - eps phi ~ lam eps^p B``.

    Uses the smallest ``eps`` of the report, with ``p`` rounded from ``p_hat``.
    """
    p_hat = report.p_hat
    if not np.isfinite(p_hat) or abs(p_hat - round(p_hat)) > 0.2:
        raise InconclusiveError(f"p_hat = {p_hat} is not resolved to an integer")
    p = int(round(p_hat))
    i = int(np.argmin(report.eps_list))
    eps = report.eps_list[i]
    model = eps ** p * report.born.values
    resid = report.residual_fields[i]
    weight = phi.grid.dx
    num = weight * np.sum(np.conj(model) * resid).real
    den = weight * np.sum(np.abs(model) ** 2)
    return float(num / den)
