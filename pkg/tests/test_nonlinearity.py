import itertools

import numpy as np
import pytest
from numpy.polynomial import chebyshev

from scatseries import ComplexField, NonlinearitySpec, SpatialGrid, n_j_integrand, phi
from scatseries.errors import ComponentMismatchError, GridMismatchError, UnsupportedCombinationError
from scatseries.nonlinearity import JetPlan, interpolation_nodes, polarization_terms, vandermonde_inverse
from scatseries.profiles import rng_from_seed

from conftest import rel

PER = SpatialGrid.periodic(8.0, 8)
TOY = SpatialGrid.toy(4)


def _rand(grid, comps, rng, real=False):
    v = rng.standard_normal((comps, grid.n)) + (0 if real else 1j * rng.standard_normal((comps, grid.n)))
    return ComplexField(grid, v)


def _hartree():
    k = np.array([[2.0, 0.5, 0.0, 0.1], [0.5, 1.0, 0.3, 0.0], [0.0, 0.3, 1.5, 0.2], [0.1, 0.0, 0.2, 0.7]])
    return NonlinearitySpec.toy_convolution_cubic(k, 0.8)


KINDS = [
    (NonlinearitySpec.gauge_power(3, 1.0), PER, 1, False),
    (NonlinearitySpec.gauge_power(5, -0.7), PER, 1, False),
    (NonlinearitySpec.real_odd_power(3, 1.0), PER, 2, True),
    (NonlinearitySpec.real_odd_power(7, 0.5), PER, 2, True),
    (NonlinearitySpec.toy_gauge_power(5, 1.0), TOY, 1, False),
    (_hartree(), TOY, 1, False),
]


def test_phi_examples():
    g = SpatialGrid.periodic(4.0, 8)
    nl = NonlinearitySpec.gauge_power(5, 1.3)
    assert phi(nl, 0.0, ComplexField.zeros(g)).is_zero()
    a = 0.6 - 0.3j
    out = phi(nl, 0.0, ComplexField(g, np.full(8, a))).values
    assert np.allclose(out, -1j * 1.3 * abs(a) ** 4 * a)
    toy = NonlinearitySpec.toy_gauge_power(5, 1.0)
    u = ComplexField(SpatialGrid.toy(2), [1.0, 1j])
    assert np.allclose(phi(toy, 1.0, u).values, -0.5j * np.array([[1.0, 1j]]))


def test_kg_nonlinearity_acts_on_velocity():
    nl = NonlinearitySpec.real_odd_power(3, 2.0)
    u = ComplexField(PER, np.stack([np.full(8, 0.5), np.full(8, 7.0)]))
    out = phi(nl, 0.0, u).values
    assert np.allclose(out[0], 0.0) and np.allclose(out[1], -2.0 * 0.125)


def test_spec_validation():
    for p in (2, 4, 1, 6):
        with pytest.raises(ValueError, match="odd"):
            NonlinearitySpec.gauge_power(p)
    with pytest.raises(UnsupportedCombinationError):
        NonlinearitySpec(NonlinearitySpec.gauge_power(3).kind, 3, 1.0, coupling=lambda t: t)
    with pytest.raises(ValueError):
        NonlinearitySpec.toy_convolution_cubic(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert NonlinearitySpec.toy_gauge_power(5).coupling_name == "lorentzian"
    with pytest.raises(ComponentMismatchError):
        phi(NonlinearitySpec.gauge_power(3), 0.0, ComplexField.zeros(PER, 2))
    with pytest.raises(GridMismatchError):
        phi(NonlinearitySpec.toy_gauge_power(3), 0.0, ComplexField.zeros(PER))


@pytest.mark.parametrize("p", [3, 5, 7, 9])
def test_vandermonde(p):
    nodes = interpolation_nodes(p)
    assert len(set(nodes.tolist())) == p + 1
    v = np.vander(nodes, p + 1, increasing=True)
    assert np.allclose(vandermonde_inverse(p) @ v, np.eye(p + 1), atol=1e-11)


@pytest.mark.parametrize("spec, grid, comps, real", KINDS)
def test_reconstruction(spec, grid, comps, real):
    rng = rng_from_seed(7)
    for _ in range(5):
        ub, w = _rand(grid, comps, rng, real), _rand(grid, comps, rng, real)
        total = sum(n_j_integrand(spec, 0.3, ub, [w] * j, j).values for j in range(1, spec.p + 1))
        exact = spec.evaluate(0.3, ub.values + w.values) - spec.evaluate(0.3, ub.values)
        assert rel(total, exact) <= 1e-12


@pytest.mark.parametrize("spec, grid, comps, real", KINDS)
def test_zero_background_and_zero_argument(spec, grid, comps, real):
    rng = rng_from_seed(8)
    w = _rand(grid, comps, rng, real)
    zero = ComplexField.zeros(grid, comps)
    for j in range(1, spec.p):
        assert np.max(np.abs(n_j_integrand(spec, 0.0, zero, [w] * j, j).values)) <= 1e-12 * np.max(np.abs(w.values)) ** spec.p
    top = n_j_integrand(spec, 0.0, zero, [w] * spec.p, spec.p).values
    assert rel(top, spec.evaluate(0.0, w.values)) <= 1e-12
    ub = _rand(grid, comps, rng, real)
    assert n_j_integrand(spec, 0.0, ub, [w, zero], 2).is_zero()


@pytest.mark.parametrize("spec, grid, comps, real", KINDS[1:2] + KINDS[3:])
def test_real_multilinear_and_symmetric(spec, grid, comps, real):
    rng = rng_from_seed(9)
    ub, a, b, c = (_rand(grid, comps, rng, real) for _ in range(4))
    j = 3
    base = n_j_integrand(spec, 0.2, ub, [a, b, c], j).values
    for perm in itertools.permutations([a, b, c]):
        assert rel(n_j_integrand(spec, 0.2, ub, list(perm), j).values, base) <= 1e-12
    d = _rand(grid, comps, rng, real)
    lhs = n_j_integrand(spec, 0.2, ub, [a + d, b, c], j).values
    rhs = base + n_j_integrand(spec, 0.2, ub, [d, b, c], j).values
    assert rel(lhs, rhs) <= 1e-11
    s = -1.7
    assert rel(n_j_integrand(spec, 0.2, ub, [a * s, b, c], j).values, s * base) <= 1e-10


def test_first_form_is_derivative_with_second_order_fd():
    spec = NonlinearitySpec.gauge_power(5, 1.0)
    rng = rng_from_seed(10)
    ub, w = _rand(PER, 1, rng), _rand(PER, 1, rng)
    exact = n_j_integrand(spec, 0.0, ub, [w], 1).values
    errs = []
    hs = np.array([1e-2, 5e-3, 2.5e-3])
    for h in hs:
        fd = (spec.evaluate(0.0, ub.values + h * w.values) - spec.evaluate(0.0, ub.values - h * w.values)) / (2 * h)
        errs.append(rel(fd, exact))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.1


def test_first_form_closed_form():
    p, lam = 5, 1.0
    spec = NonlinearitySpec.gauge_power(p, lam)
    rng = rng_from_seed(11)
    u, w = _rand(PER, 1, rng).values, _rand(PER, 1, rng).values
    m = np.abs(u) ** 2
    exact = -1j * lam * ((p + 1) / 2 * m ** ((p - 1) // 2) * w + (p - 1) / 2 * m ** ((p - 3) // 2) * u ** 2 * np.conj(w))
    got = n_j_integrand(spec, 0.0, ComplexField(PER, u), [ComplexField(PER, w)], 1).values
    assert rel(got, exact) <= 1e-12


def test_argument_errors():
    spec = NonlinearitySpec.gauge_power(3)
    z = ComplexField.zeros(PER)
    with pytest.raises(ValueError):
        n_j_integrand(spec, 0.0, z, [z] * 4, 4)
    with pytest.raises(ValueError):
        n_j_integrand(spec, 0.0, z, [z], 2)
    with pytest.raises(GridMismatchError):
        n_j_integrand(spec, 0.0, z, [ComplexField.zeros(SpatialGrid.periodic(8.0, 16))], 1)


def test_polarization_weights():
    assert polarization_terms((3,)) == (((1,), 1.0),)
    # q(a+b) - q(a) - q(b) over 2! for a symmetric bilinear form
    terms = dict(polarization_terms((1, 1)))
    assert terms == {(0, 1): -0.5, (1, 0): -0.5, (1, 1): 0.5}


def test_strang_substep_consistency():
    for spec, grid, comps, real in KINDS:
        rng = rng_from_seed(12)
        u = _rand(grid, comps, rng, real).values * 0.5
        h = 1e-6
        step = spec.strang_substep(0.4, u, h)
        assert rel((step - u) / h, spec.evaluate(0.4, u)) <= 1e-5
    gauge = NonlinearitySpec.gauge_power(5)
    u = _rand(PER, 1, rng_from_seed(13)).values
    assert np.allclose(np.abs(gauge.strang_substep(0.0, u, 0.7)), np.abs(u))


def _taylor_coefficients(spec, t, ub, ws, degree):
    nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    samples = np.array([spec.evaluate(t, ub + sum(e ** (k + 1) * w for k, w in enumerate(ws))) for e in nodes])
    flat = samples.reshape(degree + 1, -1)
    cheb = chebyshev.chebfit(nodes, flat.real, degree) + 1j * chebyshev.chebfit(nodes, flat.imag, degree)
    mono = np.array([chebyshev.cheb2poly(cheb[:, i]) for i in range(flat.shape[1])]).T
    return mono.reshape((degree + 1,) + samples.shape[1:])


@pytest.mark.parametrize("order, p", [(2, 3), (1, 5), (3, 3)])
def test_jet_rhs_matches_taylor_expansion(order, p):
    spec = NonlinearitySpec.gauge_power(p, 1.0)
    rng = rng_from_seed(14)
    ub = 0.5 * _rand(PER, 1, rng).values
    ws = [0.5 * _rand(PER, 1, rng).values for _ in range(order + 1)]
    plan = JetPlan.build(order, p)
    out = plan.rhs(spec, 0.0, np.stack([ub] + ws))
    coeffs = _taylor_coefficients(spec, 0.0, ub, ws, p * (order + 1))
    assert rel(out[0], coeffs[0]) <= 1e-12
    for m in range(order + 1):
        assert rel(out[m + 1], coeffs[m + 1]) <= 1e-8


def test_jet_plan_bookkeeping():
    plan = JetPlan.build(6, 5)
    for m, j, ells, mult in plan.tuples:
        assert j >= 2 and j + sum(ells) == m + 1 and max(ells) <= m - 1 and mult >= 1
    assert not any(m == 0 for m, *_ in plan.tuples)
    tan = JetPlan.tangents(3, 5)
    assert tan.weights[:, 1, :].tolist() == np.eye(3).tolist()
