import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from twolayer.allocator import greedy_channel, rates
from twolayer.allocator import PowerAllocation
from twolayer.errors import ScenarioError
from twolayer.roots import bisect
from twolayer.utility import (LN2, LagrangeState, RateWeights, envelope, find_intersection,
                              g_derivative, g_eval, price, utility_common, utility_dump,
                              utility_user, zero_crossings)

from conftest import random_field, static_field

noise_lists = st.lists(st.floats(1e-2, 1e2), min_size=2, max_size=5)


def _lam_for_price(c, mu0=1.0, frac=1.0):
    return c * mu0 * frac / LN2


def test_weights_validation():
    with pytest.raises(ScenarioError):
        RateWeights(0.0, 1.0, [1.0])
    with pytest.raises(ScenarioError):
        RateWeights(1.0, 1.0, [0.6, 0.6])
    with pytest.raises(ScenarioError):
        RateWeights(2.0, 1.0, [1.0], mu0_bar=1.0)
    with pytest.raises(ScenarioError):
        LagrangeState(0.0)
    w = RateWeights.uniform(4, 3.0)
    assert w.ratio == pytest.approx(1 / 3) and w.lambda0 == 0.0
    assert w.with_reward(5.0).lambda0 == 2.0


def test_user_utility_direct_value():
    nf = static_field([[1.0]])
    w = RateWeights(1.0, 1.0, [1.0])
    s = LagrangeState(_lam_for_price(0.5))
    assert utility_user(0, 0, 0.0, nf, w, s) == pytest.approx(0.5, rel=1e-14)


def test_user_utility_asymptote():
    nf = static_field([[0.3, 2.0]])
    w = RateWeights(2.0, 1.0, [1.0])
    s = LagrangeState(0.7)
    c = price(nf, w, s)
    for i in range(2):
        assert utility_user(0, i, 1e12, nf, w, s) == pytest.approx(-c[i], rel=1e-9)


def test_user_utility_decreases():
    rng = np.random.default_rng(1)
    for _ in range(100):
        nf = random_field(rng, 2, 1)
        w = RateWeights(rng.uniform(1, 5), rng.uniform(0, 1), [0.5, 0.5])
        s = LagrangeState(rng.uniform(0.01, 3))
        a = np.sort(rng.uniform(0, 10, 20))
        u = utility_user(1, 0, a, nf, w, s)
        assert np.all(np.diff(u) < 0)


def test_common_utility_single_user_equals_user_utility():
    nf = static_field([[0.4, 1.7]])
    w = RateWeights(1.5, 1.5, [1.0])
    s = LagrangeState(0.3)
    a = np.linspace(0, 5, 11)
    np.testing.assert_allclose(utility_common(1, a, nf, w, s), utility_user(0, 1, a, nf, w, s),
                               rtol=1e-14)


@given(noise_lists, st.floats(0, 20))
def test_common_utility_sandwich(z, alpha):
    K = len(z)
    nf = static_field(np.array(z)[:, None])
    split = np.random.default_rng(K).dirichlet(np.ones(K))
    w = RateWeights(1.0, 1.0, split)
    s = LagrangeState(0.5)
    u0 = utility_common(0, alpha, nf, w, s)
    worst, best = int(np.argmax(z)), int(np.argmin(z))
    lo = utility_user(worst, 0, alpha, nf, w, s)
    hi = utility_user(best, 0, alpha, nf, w, s)
    assert lo - 1e-12 <= u0 <= hi + 1e-12


def test_common_utility_two_user_value():
    nf = static_field([[1.0], [3.0]])
    w = RateWeights(1.0, 1.0, [0.5, 0.5])
    s = LagrangeState(1e-300)
    assert utility_common(0, 0.0, nf, w, s) == pytest.approx(2 / 3, rel=1e-14)


def test_g_equal_noise_is_one():
    nf = static_field([[2.0], [2.0], [2.0]])
    w = RateWeights(1.0, 1.0, [0.2, 0.3, 0.5])
    np.testing.assert_allclose(g_eval(0, np.linspace(0, 10, 7), nf, w), 1.0, rtol=1e-15)


def test_g_limit_is_one():
    nf = static_field([[0.1], [5.0]])
    w = RateWeights(1.0, 1.0, [0.5, 0.5])
    assert g_eval(0, 1e12, nf, w) == pytest.approx(1.0, abs=1e-10)


@given(noise_lists)
def test_g_is_increasing_and_concave(z):
    K = len(z)
    nf = static_field(np.array(z)[:, None])
    w = RateWeights(1.0, 1.0, np.random.default_rng(K).dirichlet(np.ones(K)))
    a = np.linspace(0, 10 * max(z), 401)
    g = g_eval(0, a, nf, w)
    assert np.all(np.diff(g) >= -1e-12)
    assert np.all(np.diff(g, 2) <= 1e-12)
    assert 0 < g[0] <= 1
    x = a[1::40]
    h = 1e-5 * (1.0 + x)
    fd = (g_eval(0, x + h, nf, w) - g_eval(0, x - h, nf, w)) / (2 * h)
    np.testing.assert_allclose(g_derivative(0, x, nf, w), fd, rtol=1e-5, atol=1e-9)


def test_no_intersection_when_common_dominates():
    nf = static_field([[1.0], [1.5]])
    w = RateWeights(10.0, 1.0, [0.5, 0.5])
    assert g_eval(0, 0.0, nf, w) > w.ratio
    assert find_intersection(0, nf, w) is None


def test_no_intersection_single_user():
    nf = static_field([[0.7]])
    assert find_intersection(0, nf, RateWeights(2.0, 1.0, [1.0])) is None


def test_intersection_matches_bisection():
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(40):
        nf = random_field(rng, 3, 1)
        w = RateWeights(1.0, rng.uniform(0.05, 0.99), rng.dirichlet(np.ones(3)))
        a = find_intersection(0, nf, w)
        if g_eval(0, 0.0, nf, w) > w.ratio:
            assert a is None
            continue
        ref = bisect(lambda x: float(g_eval(0, x, nf, w)) - w.ratio, 0.0, 1e9 * nf.z.max(),
                     xtol=1e-15)
        assert a == pytest.approx(ref, rel=1e-9, abs=1e-9)
        checked += 1
    assert checked > 10


def test_zero_crossings_absent_when_price_is_high():
    nf = static_field([[1.0], [2.0]])
    w = RateWeights(2.0, 1.0, [0.5, 0.5])
    s = LagrangeState(_lam_for_price(10.0, mu0=2.0))
    assert zero_crossings(0, nf, w, s) == (None, None)


def test_zero_crossings_coincide_for_identical_functions():
    nf = static_field([[0.8]])
    w = RateWeights(1.0, 1.0, [1.0])
    a0, a1 = zero_crossings(0, nf, w, LagrangeState(0.4))
    assert a0 == pytest.approx(a1, rel=1e-12)


def test_zero_crossing_matches_grid_scan():
    nf = static_field([[0.2], [0.5], [0.9]])
    w = RateWeights(2.0, 1.0, [0.3, 0.3, 0.4])
    s = LagrangeState(_lam_for_price(1.5, mu0=2.0))
    a0, _ = zero_crossings(0, nf, w, s)
    grid = np.linspace(0.0, 1.0, 1_000_001)
    u = utility_common(0, grid, nf, w, s)
    j = int(np.flatnonzero(np.diff(np.sign(u)) != 0)[0])
    assert grid[j] - 1e-12 <= a0 <= grid[j + 1] + 1e-12
    assert abs(a0 - 0.5 * (grid[j] + grid[j + 1])) <= 1e-6


def test_envelope_zero_when_all_negative():
    nf = static_field([[1.0], [2.0]])
    w = RateWeights(2.0, 1.0, [0.5, 0.5])
    s = LagrangeState(100.0)
    np.testing.assert_array_equal(envelope(0, np.linspace(0, 3, 5), nf, w, s), 0.0)


def test_envelope_single_user():
    nf = static_field([[0.5]])
    w = RateWeights(2.0, 1.0, [1.0])
    s = LagrangeState(0.3)
    a = np.linspace(0, 4, 9)
    expect = np.maximum(np.maximum(utility_user(0, 0, a, nf, w, s),
                                   utility_common(0, a, nf, w, s)), 0.0)
    np.testing.assert_array_equal(envelope(0, a, nf, w, s), expect)


def test_envelope_integral_equals_greedy_objective():
    rng = np.random.default_rng(12)
    for _ in range(20):
        nf = random_field(rng, 3, 1, lo=-1.5, hi=0.5)
        w = RateWeights(rng.uniform(1.5, 4), 1.0, rng.dirichlet(np.ones(3)))
        s = LagrangeState(rng.uniform(0.05, 0.6))
        p0, p1 = greedy_channel(0, s, nf, w)
        top = p0 + p1
        if top == 0:
            continue
        uni = np.zeros((3, 1))
        uni[nf.best[0], 0] = p1
        rep = rates(PowerAllocation(np.array([p0]), uni, top), nf, w)
        c = price(nf, w, s)[0]
        brk = [x for x in (p1, top) if 0 < x < 2 * top]
        area, _ = integrate.quad(lambda a: float(envelope(0, a, nf, w, s)), 0.0, 2 * top,
                                 points=brk, epsabs=1e-13, epsrel=1e-11, limit=200)
        objective = rep.lagrangian * LN2 / (w.mu0_bar * nf.layout.fractions[0]) - c * top
        assert area == pytest.approx(objective, rel=1e-8, abs=1e-10)


def test_utility_dump_layout():
    nf = static_field([[0.5], [1.0]])
    text = utility_dump(0, nf, RateWeights(2.0, 1.0, [0.5, 0.5]), LagrangeState(0.3), [0, 1])
    lines = text.split("\n")
    assert lines[0] == "alpha,u_0,u_1,u_2,envelope"
    assert len(lines) == 4 and lines[-1] == ""
