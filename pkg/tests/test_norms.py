from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from scatseries import (ComplexField, PropagatorSpec, SpatialGrid, StrichartzExponents, Trajectory, d_norm,
                        f_norms, h1_norm, hs_norm, l2_norm, time_nodes)
from scatseries.errors import (ComponentMismatchError, EmptyIntervalError, NonFiniteError,
                               UnsupportedCombinationError)
from scatseries.norms import F2Accumulator, free_flow_norms, lorentzian_coupling
from scatseries.profiles import gaussian, random_profile


def test_h1_of_zero():
    assert h1_norm(ComplexField.zeros(SpatialGrid.periodic(10.0, 64))) == 0.0


def test_h1_of_first_plane_wave():
    L = 10.0
    g = SpatialGrid.periodic(L, 64)
    xi = 2 * np.pi / L
    f = ComplexField(g, np.exp(1j * xi * g.x))
    assert h1_norm(f) == pytest.approx(np.sqrt(L * (1 + xi ** 2)), rel=1e-13)


def test_h1_of_gaussian_against_adaptive_quadrature():
    g = SpatialGrid.periodic(40.0, 512)
    f = gaussian(g, 1.0, 1.0)
    integrand = lambda x: np.exp(-2 * x ** 2) * (1 + 4 * x ** 2)  # noqa: E731
    exact = np.sqrt(quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)[0])
    assert h1_norm(f) == pytest.approx(exact, rel=1e-8)


def test_norm_errors():
    g = SpatialGrid.periodic(10.0, 16)
    with pytest.raises(ComponentMismatchError):
        h1_norm(ComplexField.zeros(g, components=2))
    bad = ComplexField.zeros(g)
    object.__setattr__(bad, "values", np.full((1, 16), np.inf + 0j))
    with pytest.raises(NonFiniteError):
        h1_norm(bad)
    with pytest.raises(UnsupportedCombinationError):
        h1_norm(ComplexField.zeros(SpatialGrid.toy(3)))


def test_parseval():
    g = SpatialGrid.periodic(20.0, 256)
    f = random_profile(g, 1.3, seed=5)
    back = np.fft.ifft(np.fft.fft(f.values))
    assert np.linalg.norm(back - f.values) <= 1e-12 * np.linalg.norm(f.values)
    assert hs_norm(f, 0.0) == pytest.approx(l2_norm(f), rel=1e-10)


def test_d_norm_variants():
    g = SpatialGrid.periodic(20.0, 128)
    u = gaussian(g, 1.0, 1.0)
    pair = ComplexField(g, np.stack([u.values[0], u.values[0]]))
    assert d_norm(u) == pytest.approx(h1_norm(u))
    assert d_norm(pair) == pytest.approx(np.hypot(h1_norm(u), l2_norm(u)))
    toy = ComplexField(SpatialGrid.toy(2), [3.0, 4.0j])
    assert d_norm(toy) == pytest.approx(5.0)


@pytest.mark.parametrize("p", [5, 7, 9])
def test_exponents(p):
    e = StrichartzExponents.for_power(p)
    assert e.admissible()
    assert e.q == Fraction(4 * p + 4, p - 1) and e.r == p + 1
    assert 0 <= e.theta < 1 and 0 < e.delta <= 1 and e.theta + e.delta == 1


def test_exponent_values_and_rejections():
    assert StrichartzExponents.for_power(5).theta == 0
    assert StrichartzExponents.for_power(7).theta == Fraction(4, 9)
    for p in (3, 4, 1):
        with pytest.raises(ValueError):
            StrichartzExponents.for_power(p)
    toy = StrichartzExponents.toy(5)
    assert toy.is_toy and toy.q == 8 and toy.admissible()


def test_zero_trajectory_report():
    g = SpatialGrid.periodic(10.0, 32)
    traj = Trajectory.zeros(g, time_nodes(-1, 1, 0.1))
    rep = f_norms(traj, None, StrichartzExponents.for_power(5), with_J=True)
    assert (rep.d_norm, rep.f1_norm, rep.f2_norm, rep.f3_norm, rep.f_norm) == (0, 0, 0, 0, 0)


def test_free_flow_f1_is_data_norm():
    g = SpatialGrid.periodic(40.0, 256)
    prop = PropagatorSpec.schrodinger(g)
    f = random_profile(g, 1.0, seed=3)
    traj = prop.free_trajectory(f, time_nodes(-2, 2, 0.01))
    rep = f_norms(traj, None, StrichartzExponents.for_power(5))
    assert rep.f1_norm == pytest.approx(h1_norm(f), rel=1e-10)
    assert rep.f_norm == max(rep.f1_norm, rep.f2_norm)


def test_interval_errors():
    g = SpatialGrid.toy(2)
    traj = Trajectory.zeros(g, time_nodes(0, 1, 0.1))
    exps = StrichartzExponents.toy(5)
    with pytest.raises(EmptyIntervalError):
        f_norms(traj, (0.5, 0.5), exps)
    with pytest.raises(EmptyIntervalError):
        f_norms(traj, (0.51, 0.52), exps)
    with pytest.raises(UnsupportedCombinationError):
        f_norms(traj, None, exps, with_J=True)


def test_f2_plateau_and_refinement():
    exps = StrichartzExponents.for_power(5)
    values = []
    for T in (1.0, 2.0, 4.0, 8.0):
        coarse = SpatialGrid.periodic(80.0, 1024)
        fine = SpatialGrid.periodic(80.0, 2048)
        a = free_flow_norms(PropagatorSpec.schrodinger(coarse), gaussian(coarse), time_nodes(-T, T, 1e-2), exps)[1]
        b = free_flow_norms(PropagatorSpec.schrodinger(fine), gaussian(fine), time_nodes(-T, T, 5e-3), exps)[1]
        assert a == pytest.approx(b, rel=1e-4)
        values.append(a)
    steps = np.diff(values)
    assert np.all(steps > 0) and np.all(np.diff(steps) < 0)


def _toy_traj():
    g = SpatialGrid.toy(3)
    prop = PropagatorSpec.toy(g)
    f = random_profile(g, 1.0, seed=4)
    return prop.free_trajectory(f, time_nodes(-10, 10, 0.05))


def test_restriction_monotone_and_tails_vanish():
    traj = _toy_traj()
    exps = StrichartzExponents.toy(5)
    full = f_norms(traj, None, exps).f2_norm
    tails = [f_norms(traj, (t, 10.0), exps).f2_norm for t in (0.0, 2.0, 5.0, 9.0)]
    assert all(t <= full for t in tails)
    assert np.all(np.diff(tails) <= 0)


def test_disjoint_union_within_factor_two():
    traj = _toy_traj()
    exps = StrichartzExponents.toy(5)
    a = f_norms(traj, (-10.0, 0.0), exps).f_norm
    b = f_norms(traj, (0.0, 10.0), exps).f_norm
    ab = f_norms(traj, None, exps).f_norm
    assert max(a, b) <= ab <= a + b <= 2 * ab


def test_accumulator_matches_direct():
    traj = _toy_traj()
    exps = StrichartzExponents.toy(5)
    acc = F2Accumulator(traj.grid, traj.times, traj.snapshots, exps)
    i, j = 40, 250
    direct = f_norms(traj, (traj.times[i], traj.times[j]), exps).f2_norm
    assert acc.norm(i, j) == pytest.approx(direct, rel=1e-12)


def test_toy_f2_weighting():
    g = SpatialGrid.toy(1)
    times = time_nodes(-50, 50, 0.01)
    traj = Trajectory(g, times, np.ones((times.size, 1, 1), dtype=complex))
    f2 = f_norms(traj, None, StrichartzExponents.toy(5)).f2_norm
    exact = (2 * np.arctan(50.0)) ** (1 / 8)
    assert f2 == pytest.approx(exact, rel=1e-6)
    assert lorentzian_coupling(np.array([0.0, 1.0])).tolist() == [1.0, 0.5]


def test_J_norm_present_for_schrodinger():
    g = SpatialGrid.periodic(40.0, 256)
    prop = PropagatorSpec.schrodinger(g)
    traj = prop.free_trajectory(gaussian(g), time_nodes(-1, 1, 0.05))
    rep = f_norms(traj, None, StrichartzExponents.for_power(5), with_J=True)
    assert rep.f3_norm > 0 and rep.f_norm >= rep.f3_norm
