"""Polynomial nonlinearities and their exact real-multilinear decomposition.

The evolution is written as ``du/dt = L u + Phi(t, u)``.  For a base state
``b`` and a perturbation ``v`` the map ``eps -> Phi(b + eps v)`` is a real
polynomial of degree ``p``; its coefficient of ``eps^j`` is the degree-j form
``q_j(v)`` evaluated on the diagonal.  Off-diagonal values of the symmetric
j-linear form are recovered from diagonal ones by finite-difference
polarization.
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ComponentMismatchError, GridMismatchError, NonFiniteError, UnsupportedCombinationError
from .grid import ComplexField
from .norms import lorentzian_coupling


class NonlinearityKind(enum.Enum):
    GAUGE_POWER = "gauge-power"
    REAL_ODD_POWER = "real-odd-power"
    TOY_GAUGE_POWER = "toy-gauge-power"
    TOY_CONVOLUTION_CUBIC = "toy-convolution-cubic"


_COMPONENTS = {
    NonlinearityKind.GAUGE_POWER: 1,
    NonlinearityKind.REAL_ODD_POWER: 2,
    NonlinearityKind.TOY_GAUGE_POWER: 1,
    NonlinearityKind.TOY_CONVOLUTION_CUBIC: 1,
}


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    kind: NonlinearityKind
    p: int
    lam: float = 1.0
    coupling: Optional[Callable] = None
    conv_kernel: Optional[np.ndarray] = None
    coupling_name: str = field(default="")

    def __post_init__(self):
        p = self.p
        if not isinstance(p, (int, np.integer)) or p < 3 or p % 2 == 0:
            raise ValueError(f"p must be an odd integer >= 3 (even powers are not polynomial in u, u-bar "
                             f"with the required parity), got {p}")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "lam", float(self.lam))
        if self.is_toy:
            if self.coupling is None:
                object.__setattr__(self, "coupling", lorentzian_coupling)
                object.__setattr__(self, "coupling_name", "lorentzian")
        elif self.coupling is not None:
            raise UnsupportedCombinationError("a coupling profile is only meaningful for toy kinds")
        if self.kind is NonlinearityKind.TOY_CONVOLUTION_CUBIC:
            if self.p != 3:
                raise ValueError("the convolution nonlinearity is cubic (p = 3)")
            if self.conv_kernel is None:
                raise ValueError("conv_kernel is required for the convolution nonlinearity")
            kern = np.array(self.conv_kernel, dtype=float)
            if kern.ndim != 2 or kern.shape[0] != kern.shape[1] or not np.allclose(kern, kern.T, atol=0, rtol=1e-14):
                raise ValueError("conv_kernel must be a real symmetric square matrix")
            kern.flags.writeable = False
            object.__setattr__(self, "conv_kernel", kern)
        elif self.conv_kernel is not None:
            raise UnsupportedCombinationError("conv_kernel only applies to the convolution nonlinearity")

    @classmethod
    def gauge_power(cls, p, lam=1.0):
        return cls(NonlinearityKind.GAUGE_POWER, p, lam)

    @classmethod
    def real_odd_power(cls, p, lam=1.0):
        return cls(NonlinearityKind.REAL_ODD_POWER, p, lam)

    @classmethod
    def toy_gauge_power(cls, p, lam=1.0, coupling=None):
        return cls(NonlinearityKind.TOY_GAUGE_POWER, p, lam, coupling)

    @classmethod
    def toy_convolution_cubic(cls, kernel, lam=1.0, coupling=None):
        return cls(NonlinearityKind.TOY_CONVOLUTION_CUBIC, 3, lam, coupling, np.asarray(kernel, dtype=float))

    @property
    def is_toy(self):
        return self.kind in (NonlinearityKind.TOY_GAUGE_POWER, NonlinearityKind.TOY_CONVOLUTION_CUBIC)

    @property
    def components(self):
        return _COMPONENTS[self.kind]

    def with_lam(self, lam):
        return NonlinearitySpec(self.kind, self.p, lam, self.coupling if self.is_toy else None,
                                self.conv_kernel, self.coupling_name)

    def strength(self, t):
        """``lam * c(t)`` for toy kinds, ``lam`` otherwise.

        An array ``t`` (one time per leading entry) yields shape ``(B, 1, 1)``.
        """
        if not self.is_toy:
            return self.lam
        s = self.lam * self.coupling(np.asarray(t, dtype=float))
        return s[..., None, None] if np.ndim(s) else s

    # -- array level -------------------------------------------------------
    def evaluate(self, t, arr):
        """``Phi(t, arr)`` for ``arr`` of shape ``(..., C, n)``."""
        k = self.kind
        if k is NonlinearityKind.REAL_ODD_POWER:
            out = np.zeros_like(arr)
            out[..., 1, :] = -self.lam * arr[..., 0, :] ** self.p
            return out
        if k is NonlinearityKind.TOY_CONVOLUTION_CUBIC:
            dens = (np.abs(arr) ** 2) @ self.conv_kernel.T
            return -1j * self.strength(t) * dens * arr
        mod2 = arr.real ** 2 + arr.imag ** 2
        return -1j * self.strength(t) * mod2 ** ((self.p - 1) // 2) * arr

    def strang_substep(self, t_mid, arr, h):
        """Exact flow of ``du/dt = Phi(t, u)`` over a step ``h`` centred at ``t_mid``.

        For toy kinds the coupling is frozen at the midpoint, which keeps the
        split scheme second order.
        """
        k = self.kind
        if k is NonlinearityKind.REAL_ODD_POWER:
            out = arr.copy()
            out[..., 1, :] -= h * self.lam * arr[..., 0, :] ** self.p
            return out
        if k is NonlinearityKind.TOY_CONVOLUTION_CUBIC:
            dens = (np.abs(arr) ** 2) @ self.conv_kernel.T
        else:
            dens = np.abs(arr) ** (self.p - 1)
        return np.exp(-1j * h * self.strength(t_mid) * dens) * arr

    def potential_density(self, arr):
        """Pointwise potential energy density ``lam/(p+1) |u|^(p+1)`` (u-component)."""
        if self.kind is NonlinearityKind.REAL_ODD_POWER:
            return self.lam / (self.p + 1) * arr[..., 0, :].real ** (self.p + 1)
        return self.lam / (self.p + 1) * np.abs(arr[..., 0, :]) ** (self.p + 1)

    def check_field(self, f):
        if f.components != self.components:
            raise ComponentMismatchError(
                f"{self.kind.value} expects {self.components} component(s), got {f.components}")
        if self.is_toy == f.grid.is_periodic:
            raise GridMismatchError(f"{self.kind.value} does not live on a {f.grid.kind.value} grid")
        if self.kind is NonlinearityKind.TOY_CONVOLUTION_CUBIC and self.conv_kernel.shape[0] != f.grid.n:
            raise GridMismatchError("conv_kernel size differs from the toy dimension")


# -- degree extraction -------------------------------------------------------

@lru_cache(maxsize=None)
def interpolation_nodes(p):
    """``0, 1, -1, 2, -2, ..., (p-1)/2, -(p-1)/2, (p+1)/2``."""
    half = (p - 1) // 2
    nodes = [0.0]
    for m in range(1, half + 1):
        nodes += [float(m), float(-m)]
    nodes.append(float(half + 1))
    arr = np.array(nodes)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def vandermonde_inverse(p):
    """Maps samples at :func:`interpolation_nodes` to monomial coefficients.

    Built in exact rational arithmetic: column ``i`` holds the coefficients of
    the Lagrange basis polynomial of node ``i``.  Correctly rounded entries keep
    the column sums exact, which a floating-point inverse loses at p >= 7.
    """
    nodes = [Fraction(int(x)) for x in interpolation_nodes(p)]
    inv = np.empty((p + 1, p + 1))
    for i, xi in enumerate(nodes):
        poly = [Fraction(1)]
        for m, xm in enumerate(nodes):
            if m == i:
                continue
            scale = xi - xm
            shifted = [Fraction(0)] + poly
            poly = [(a - xm * b) / scale for a, b in zip(shifted, poly + [Fraction(0)])]
        inv[:, i] = [float(c) for c in poly]
    inv.flags.writeable = False
    return inv


def homogeneous_parts(spec, t, base, directions, phi_base=None):
    """Coefficients of ``eps^k`` in ``Phi(t, base + eps * v)`` for each direction.

    ``base`` has shape ``(C, n)``, ``directions`` shape ``(B, C, n)``.  Returns
    shape ``(p + 1, B, C, n)``.
    """
    p = spec.p
    nodes = interpolation_nodes(p)
    phi0 = spec.evaluate(t, base) if phi_base is None else phi_base
    # rows of the inverse sum to zero beyond degree 0, so differences against
    # the base sample give exact zeros for vanishing directions
    diffs = spec.evaluate(t, base + nodes[1:, None, None, None] * directions) - phi0
    out = np.empty((p + 1,) + directions.shape, dtype=complex)
    out[0] = phi0
    out[1:] = np.tensordot(vandermonde_inverse(p)[1:, 1:], diffs, axes=(1, 0))
    return out


@lru_cache(maxsize=None)
def polarization_terms(multiplicities):
    """Finite-difference polarization of a symmetric form on a multiset.

    For arguments ``a_1^{k_1} ... a_r^{k_r}`` with ``sum k = j`` returns pairs
    ``(c, weight)`` so that the symmetric j-linear form equals
    ``sum weight * q_j(sum_i c_i a_i)``.
    """
    ks = tuple(multiplicities)
    j = sum(ks)
    if len(ks) == 1:
        return (((1,), 1.0),)
    terms = []
    for cs in itertools.product(*(range(k + 1) for k in ks)):
        if not any(cs):
            continue
        w = 1.0
        for k, c in zip(ks, cs):
            w *= (-1) ** (k - c) * math.comb(k, c)
        terms.append((cs, w / math.factorial(j)))
    return tuple(terms)


def _validate_args(spec, ubar, ws, j):
    if not 1 <= j <= spec.p:
        raise ValueError(f"j must lie in [1, {spec.p}], got {j}")
    if len(ws) != j:
        raise ValueError(f"expected {j} arguments, got {len(ws)}")
    spec.check_field(ubar)
    for w in ws:
        ubar.same_layout(w)


def n_j_integrand(spec, t, ubar, ws, j):
    """Value of the j-th multilinear form ``Phi_j(ubar; w_1, ..., w_j)``.

    Symmetric and real-multilinear in the ``w``; the sum over ``j`` with all
    ``w`` equal to ``w`` gives ``Phi(ubar + w) - Phi(ubar)``.
    """
    ws = list(ws)
    _validate_args(spec, ubar, ws, j)
    groups = []
    for w in ws:
        for g in groups:
            if g[0] is w or np.array_equal(g[0].values, w.values):
                g[1] += 1
                break
        else:
            groups.append([w, 1])
    if any(g[0].is_zero() for g in groups):
        return ComplexField.zeros(ubar.grid, ubar.components)
    terms = polarization_terms(tuple(g[1] for g in groups))
    dirs = np.stack([sum(c * g[0].values for c, g in zip(cs, groups)) for cs, _ in terms])
    coeffs = homogeneous_parts(spec, t, ubar.values, dirs)[j]
    weights = np.array([w for _, w in terms])
    values = np.tensordot(weights, coeffs, axes=(0, 0))
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite multilinear form value")
    return ComplexField(ubar.grid, values)


def phi(spec, t, u):
    spec.check_field(u)
    return ComplexField(u.grid, spec.evaluate(t, u.values))


# -- Taylor jets -------------------------------------------------------------

def _multisets(total, size, upper):
    """Non-decreasing tuples of ``size`` entries in ``[0, upper]`` summing to ``total``."""
    def rec(remaining, slots, low):
        if slots == 0:
            if remaining == 0:
                yield ()
            return
        for v in range(low, min(upper, remaining) + 1):
            if v * slots > remaining:
                break
            for rest in rec(remaining - v, slots - 1, v):
                yield (v,) + rest
    return list(rec(total, size, 0))


@dataclass(frozen=True)
class JetPlan:
    """Bookkeeping for the right-hand side of the coefficient equations.

    With ``u = ubar + sum_m eps^(m+1) w_m``, the coefficient ``w_m`` obeys
    ``dw_m/dt = L w_m + Phi_1(ubar)[w_m] + sum_{j>=2} sum_{j + l_1 + ... + l_j = m + 1} Phi_j(ubar; w_l1, ..., w_lj)``.
    ``directions[v]`` is an integer combination of ``w_0..w_K``; the derivative
    of ``w_m`` is ``sum_{j, v} weights[m, j, v] * q_j(direction_v)``.
    """

    order: int
    p: int
    directions: np.ndarray
    weights: np.ndarray
    tuples: tuple

    @classmethod
    @lru_cache(maxsize=None)
    def build(cls, order, p):
        index = {}
        entries = []
        tuples = []

        def direction(cs):
            if cs not in index:
                index[cs] = len(index)
            return index[cs]

        for m in range(order + 1):
            entries.append((m, 1, direction(tuple(int(i == m) for i in range(order + 1))), 1.0))
            for j in range(2, p + 1):
                for ells in _multisets(m + 1 - j, j, order):
                    if ells and max(ells) > m - 1:
                        raise AssertionError(f"ill-founded index tuple {ells} for m={m}, j={j}")
                    counts = Counter(ells)
                    distinct = sorted(counts)
                    mult = math.factorial(j)
                    for d in distinct:
                        mult //= math.factorial(counts[d])
                    tuples.append((m, j, ells, mult))
                    for cs, w in polarization_terms(tuple(counts[d] for d in distinct)):
                        full = [0] * (order + 1)
                        for d, c in zip(distinct, cs):
                            full[d] = c
                        entries.append((m, j, direction(tuple(full)), mult * w))
        directions = np.zeros((max(len(index), 1), order + 1))
        for cs, v in index.items():
            directions[v] = cs
        weights = np.zeros((order + 1, p + 1, directions.shape[0]))
        for m, j, v, w in entries:
            weights[m, j, v] += w
        directions.flags.writeable = False
        weights.flags.writeable = False
        return cls(order, p, directions, weights, tuple(tuples))

    @classmethod
    @lru_cache(maxsize=None)
    def tangents(cls, count, p):
        """``count`` independent tangent flows along one background."""
        directions = np.eye(count)
        weights = np.zeros((count, p + 1, count))
        weights[np.arange(count), 1, np.arange(count)] = 1.0
        directions.flags.writeable = False
        weights.flags.writeable = False
        return cls(count - 1, p, directions, weights, ())

    def rhs(self, spec, t, jet):
        """Nonlinear part of the jet derivative; ``jet = [ubar, w_0, ..., w_K]``."""
        base = jet[0]
        phi_base = spec.evaluate(t, base)
        dirs = np.tensordot(self.directions, jet[1:], axes=(1, 0))
        parts = homogeneous_parts(spec, t, base, dirs, phi_base)
        out = np.empty_like(jet)
        out[0] = phi_base
        out[1:] = np.einsum("mjv,jv...->m...", self.weights, parts)
        return out
