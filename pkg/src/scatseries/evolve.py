"""Time integration of the nonlinear flow, its tangent flow and Taylor jets.

Schemes:

* Strang splitting ``U(h/2) o exact nonlinear substep o U(h/2)``.
* Lawson RK4: classical RK4 in the interaction picture, exact for ``Phi = 0``.

Tangent and higher-order coefficient flows are integrated *together with* the
background as one jet ``[ubar, w_0, ..., w_K]`` with Lawson RK4.  The jet step
is then the exact Taylor expansion of the discrete nonlinear step, so finite
differences of the nonlinear solver agree with the coefficient flows up to
round-off plus the finite-difference truncation.
"""
from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DivergedError, GridMismatchError
from .grid import Trajectory, time_nodes
from .nonlinearity import JetPlan, NonlinearityKind
from .propagator import PropagatorKind

log = logging.getLogger(__name__)


class Scheme(enum.Enum):
    STRANG = "strang"
    LAWSON_RK4 = "lawson-rk4"


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    horizon: float
    scheme: Scheme = Scheme.STRANG
    conservation_check_every: int = 0
    stability_threshold: float = 10.0
    save_every: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.horizon > 0:
            raise ValueError("dt and horizon must be positive")
        steps = 2 * self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-12 * steps:
            raise ValueError(f"dt={self.dt} does not divide 2T={2 * self.horizon}")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def with_(self, **changes):
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return IntegratorConfig(**fields)


def default_scheme(nl):
    return Scheme.STRANG if nl.kind is NonlinearityKind.GAUGE_POWER else Scheme.LAWSON_RK4


# -- conserved quantities ----------------------------------------------------

def mass(prop, arr):
    return float(prop.grid.dx * np.sum(np.abs(arr) ** 2))


def energy(prop, nl, arr):
    """Conserved Hamiltonian of the Schrodinger or Klein-Gordon flow.

    Schrodinger: ``1/2 |grad u|^2 + 2 lam/(p+1) |u|^(p+1)`` (the factor 2 pairs
    with the 1/2 in front of the Laplacian).  Klein-Gordon:
    ``1/2 (v^2 + |grad u|^2 + m^2 u^2) + lam/(p+1) u^(p+1)``.
    """
    grid = prop.grid
    grad = prop.gradient_array(arr[0])
    kinetic = 0.5 * np.sum(np.abs(grad) ** 2)
    potential = np.sum(nl.potential_density(arr))
    if prop.kind is PropagatorKind.KLEIN_GORDON:
        kinetic += 0.5 * np.sum(np.abs(arr[1]) ** 2 + prop.kg_mass ** 2 * np.abs(arr[0]) ** 2)
    else:
        potential *= 2.0
    return float(grid.dx * (kinetic + potential))


def _invariants(prop, nl, arr):
    if not prop.grid.is_periodic:
        return {}
    out = {"energy": energy(prop, nl, arr)}
    if prop.kind is PropagatorKind.SCHRODINGER:
        out["mass"] = mass(prop, arr)
    return out


# -- one-step maps -----------------------------------------------------------

def lawson_rk4_step(prop, rhs, t, h, y):
    k1 = rhs(t, y)
    half = prop.evolve_array(h / 2, np.stack([y, k1]))
    uy, uk1 = half[0], half[1]
    k2 = rhs(t + h / 2, uy + (h / 2) * uk1)
    k3 = rhs(t + h / 2, uy + (h / 2) * k2)
    k4 = rhs(t + h, prop.evolve_array(h / 2, uy + h * k3))
    return prop.evolve_array(h / 2, uy + (h / 6) * uk1 + (h / 3) * (k2 + k3)) + (h / 6) * k4


def strang_step(prop, nl, t, h, y):
    y = prop.evolve_array(h / 2, y)
    y = nl.strang_substep(t + h / 2, y, h)
    return prop.evolve_array(h / 2, y)


def _check_stability(prop, cfg, scheme):
    if scheme is Scheme.LAWSON_RK4:
        ratio = cfg.dt * prop.max_phase_rate()
        if ratio > cfg.stability_threshold:
            warnings.warn(f"dt * max phase rate = {ratio:.3g} exceeds the stability threshold "
                          f"{cfg.stability_threshold}", RuntimeWarning, stacklevel=3)


def _march(prop, step, y0, times, save_every, on_step=None):
    """Advance ``y0`` over ``times`` and record every ``save_every``-th node."""
    if (times.size - 1) % save_every:
        raise ValueError(f"save_every={save_every} does not divide the {times.size - 1} steps")
    saved_idx = list(range(0, times.size, save_every))
    out = np.empty((len(saved_idx),) + y0.shape, dtype=complex)
    y = np.array(y0, dtype=complex)
    out[0] = y
    slot = 1
    for n in range(times.size - 1):
        h = times[n + 1] - times[n]
        y = step(times[n], h, y)
        if not np.isfinite(y.sum()):
            raise DivergedError(f"non-finite state after t={times[n]:.6g}", last_time=float(times[n]))
        if on_step is not None:
            on_step(n + 1, y)
        if slot < len(saved_idx) and saved_idx[slot] == n + 1:
            out[slot] = y
            slot += 1
    return times[saved_idx], out


def solve_nonlinear(prop, nl, cfg, u_init, t_init, t_end=None):
    """Trajectory of ``du/dt = L u + Phi(t, u)`` from ``u(t_init) = u_init``."""
    prop.check_field(u_init)
    nl.check_field(u_init)
    t_end = cfg.horizon if t_end is None else t_end
    times = time_nodes(t_init, t_end, cfg.dt)
    scheme = cfg.scheme
    _check_stability(prop, cfg, scheme)

    if scheme is Scheme.STRANG:
        def step(t, h, y):
            return strang_step(prop, nl, t, h, y)
    else:
        def step(t, h, y):
            return lawson_rk4_step(prop, nl.evaluate, t, h, y)

    records = []
    check = cfg.conservation_check_every
    if check and prop.grid.is_periodic:
        records.append((float(times[0]), _invariants(prop, nl, u_init.values)))

        def on_step(n, y):
            if n % check == 0 or n == times.size - 1:
                records.append((float(times[n]), _invariants(prop, nl, y)))
    else:
        on_step = None

    saved_t, snaps = _march(prop, step, u_init.values, times, cfg.save_every, on_step)
    diag = {"scheme": scheme.value, "dt": cfg.dt, "steps": times.size - 1}
    if records:
        diag["conservation"] = records
        diag["drift"] = conservation_drift(records)
    return Trajectory(prop.grid, saved_t, snaps, diag)


def conservation_drift(records):
    """Max relative deviation of each recorded invariant from its first value."""
    drift = {}
    for key in records[0][1]:
        vals = np.array([r[1][key] for r in records])
        scale = abs(vals[0]) if vals[0] != 0 else 1.0
        drift[key] = float(np.max(np.abs(vals - vals[0])) / scale)
    return drift


# -- jets --------------------------------------------------------------------

class _SourceInterpolator:
    """Cubic interpolation of a sampled source in the interaction picture."""

    # Lagrange weights at the midpoint of the first/interior/last interval
    _FIRST = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
    _MID = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
    _LAST = _FIRST[::-1]

    def __init__(self, prop, source):
        self.prop = prop
        self.times = source.times
        self.dt = source.dt
        self.snaps = source.snapshots
        self.profiles = prop.evolve_array(-source.times, source.snapshots)

    def at(self, t):
        pos = (t - self.times[0]) / self.dt
        i = int(round(pos))
        if abs(pos - i) < 1e-9:
            return self.snaps[i]
        i = int(np.floor(pos))
        m = self.times.size
        if m < 4:
            prof = 0.5 * (self.profiles[i] + self.profiles[i + 1])
        elif i == 0:
            prof = np.tensordot(self._FIRST, self.profiles[:4], axes=(0, 0))
        elif i == m - 2:
            prof = np.tensordot(self._LAST, self.profiles[-4:], axes=(0, 0))
        else:
            prof = np.tensordot(self._MID, self.profiles[i - 1:i + 3], axes=(0, 0))
        return self.prop.evolve_array(t, prof)


def integrate_jet(prop, nl, cfg, ubar_init, w_inits, t_init, t_end=None, source=None, plan=None):
    """Integrate ``[ubar, w_0, ..., w_K]`` jointly with Lawson RK4.

    ``w_inits`` is an array ``(K+1, C, n)``.  By default the ``w_k`` are the
    Taylor coefficients of the flow; pass ``plan=JetPlan.tangents(...)`` for
    independent tangent flows instead.  ``source`` (optional Trajectory on the
    step nodes) is added to the equation of ``w_0``.  Returns the background
    trajectory and the list of coefficient trajectories.
    """
    w_inits = np.asarray(w_inits, dtype=complex)
    order = w_inits.shape[0] - 1
    plan = JetPlan.build(order, nl.p) if plan is None else plan
    t_end = cfg.horizon if t_end is None else t_end
    times = time_nodes(t_init, t_end, cfg.dt)
    _check_stability(prop, cfg, Scheme.LAWSON_RK4)

    interp = None
    if source is not None:
        if source.grid != prop.grid or source.components != prop.components:
            raise GridMismatchError("source layout differs from the propagator")
        if abs(source.dt - cfg.dt) > 1e-12 * cfg.dt or source.times[0] > t_init + 1e-9 or source.times[-1] < t_end - 1e-9:
            raise GridMismatchError("source must be sampled on the integrator's time nodes")
        interp = _SourceInterpolator(prop, source)

    def rhs(t, y):
        out = plan.rhs(nl, t, y)
        if interp is not None:
            out[1] += interp.at(t)
        return out

    y0 = np.concatenate([np.asarray(ubar_init, dtype=complex)[None], w_inits])

    def step(t, h, y):
        return lawson_rk4_step(prop, rhs, t, h, y)

    saved_t, snaps = _march(prop, step, y0, times, cfg.save_every)
    diag = {"scheme": "lawson-rk4-jet", "dt": cfg.dt, "order": order}
    background = Trajectory(prop.grid, saved_t, snaps[:, 0], dict(diag))
    coeffs = [Trajectory(prop.grid, saved_t, snaps[:, 1 + k], dict(diag)) for k in range(order + 1)]
    return background, coeffs


def background_deviation(reference, recomputed):
    """Relative max-norm gap between a supplied and a re-integrated background."""
    idx = np.searchsorted(reference.times, recomputed.times - 1e-9)
    idx = np.clip(idx, 0, reference.times.size - 1)
    match = np.abs(reference.times[idx] - recomputed.times) < 1e-9
    if not np.any(match):
        return float("nan")
    a = reference.snapshots[idx[match]]
    b = recomputed.snapshots[match]
    scale = max(np.max(np.abs(a)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def solve_tangent(prop, nl, cfg, background, w_init, t_init, source=None):
    """Linearised flow ``dw/dt = L w + Phi_1(ubar)[w] + source`` along ``background``.

    The background is re-integrated from its value at ``t_init`` together with
    ``w``; the gap to the supplied trajectory is stored in the diagnostics
    under ``background_deviation``.
    """
    prop.check_field(w_init)
    if background.grid != prop.grid:
        raise GridMismatchError("background grid differs from propagator grid")
    start = background.index_of(t_init)
    recomputed, (w,) = integrate_jet(
        prop, nl, cfg, background.snapshots[start], w_init.values[None], t_init, source=source)
    dev = background_deviation(background, recomputed)
    if dev > 1e-6:
        log.warning("re-integrated background deviates from the supplied one by %.3g", dev)
    diag = dict(w.diagnostics)
    diag["background_deviation"] = dev
    return Trajectory(w.grid, w.times, w.snapshots, diag)

