import itertools

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from tfm_lab.dists import power, sample, second_moment, uniform
from tfm_lab.mech_core import MechanismParams, myerson_payment
from tfm_lab.ssp_k1 import (
    SoftSecondPriceK1,
    alloc_k1,
    expected_revenue,
    pay_k1,
    pay_k1_all,
    pay_perturbed,
    revenue,
    theta,
    theta_all,
)

mp.mp.dps = 40


def mp_payment(b, i, m):
    """Oracle: high-precision quadrature of p = b_i - (1/a_i) int_0^{b_i} a_i(t) dt."""
    b = [mp.mpf(x) for x in b]
    m = mp.mpf(m)
    others = sum(mp.e ** (m * x) for j, x in enumerate(b) if j != i)

    def a(t):
        return mp.e ** (m * t) / (mp.e ** (m * t) + others)

    return b[i] - mp.quad(a, [0, b[i]]) / a(b[i])


bid_vectors = arrays(np.float64, st.integers(2, 7), elements=st.floats(0.0, 1.0))


# -- allocation --------------------------------------------------------------------


def test_known_instance():
    # n=2, m=1, b=(1, 0.5): values from the mpmath oracle above
    b = np.array([1.0, 0.5])
    np.testing.assert_allclose(alloc_k1(b, 1.0), [0.62245933120185456, 0.37754066879814544], atol=1e-15)
    np.testing.assert_allclose(pay_k1_all(b, 1.0), [0.19673467014368329, 0.074045103077716941], atol=1e-14)


def test_payment_matches_mpmath_oracle(rng):
    for _ in range(40):
        n = int(rng.integers(1, 8))
        m = float(rng.choice([1e-4, 0.3, 1.0, 4.0, 25.0]))
        b = rng.random(n)
        p = pay_k1_all(b, m)
        for i in range(n):
            assert p[i] == pytest.approx(float(mp_payment(b, i, m)), abs=1e-12)
            assert pay_k1(b, i, m) == pytest.approx(p[i], abs=1e-14)


def test_payment_matches_generic_quadrature(rng):
    B = rng.random((200, 5))
    m = 2.0
    p = pay_k1_all(B, m)
    for i in range(5):
        others = np.exp(m * np.delete(B, i, axis=1)).sum(axis=1)

        def slice_fn(t, others=others):
            t = np.asarray(t)
            o = others.reshape(others.shape + (1,) * (t.ndim - 1))
            return np.exp(m * t) / (np.exp(m * t) + o)

        np.testing.assert_allclose(myerson_payment(slice_fn, B[:, i]), p[:, i], atol=1e-12)


def test_zero_temperature_limit():
    b = np.array([0.3, 0.9, 0.5])
    np.testing.assert_allclose(alloc_k1(b, 0.0), 1 / 3)
    np.testing.assert_array_equal(pay_k1_all(b, 0.0), 0.0)
    assert pay_k1(b, 1, 0.0) == 0.0


def test_extreme_temperatures_stay_finite():
    b = np.array([0.9, 0.7, 0.4])
    for m in (1e-8, 1e3, 1e5):
        assert np.all(np.isfinite(pay_k1_all(b, m)))
        assert np.all(np.isfinite(alloc_k1(b, m)))
    # sharp limit: the winner pays the second bid, losers pay their own bid minus a vanishing amount
    np.testing.assert_allclose(pay_k1_all(b, 1e5)[0], 0.7, atol=1e-9)


def test_single_user():
    assert alloc_k1(np.array([0.4]), 3.0)[0] == 1.0
    # a lone user is always confirmed, so the payment is zero
    assert pay_k1_all(np.array([0.4]), 3.0)[0] == pytest.approx(0.0, abs=1e-15)


# -- variation term ----------------------------------------------------------------


def test_theta_and_revenue_against_loops(rng):
    b = rng.random(5)
    h, c = 0.3, 0.4
    n = b.size
    th = [-0.5 * h * b[i] ** 2 * (sum(b[j] ** 2 for j in range(n) if j != i) / (c * (n - 1)) - 1) for i in range(n)]
    np.testing.assert_allclose(theta_all(b, h, c), th, atol=1e-15)
    np.testing.assert_allclose([theta(b, i, h, c) for i in range(n)], th, atol=1e-15)
    pairs = sum(b[i] ** 2 * b[j] ** 2 for i, j in itertools.combinations(range(n), 2))
    assert revenue(b, h, c) == pytest.approx(0.5 * h * (np.sum(b**2) - pairs / (c * (n - 1))), abs=1e-15)


def test_variation_term_needs_two_users():
    for fn in (lambda: theta_all([0.5], 1, 1), lambda: theta([0.5], 0, 1, 1), lambda: revenue([0.5], 1, 1)):
        with pytest.raises(ValueError):
            fn()


def test_revenue_increments_equal_theta_increments(rng):
    # r(b) - r(0, b_-i) = theta_i(b) - theta_i(0, b_-i): the potential condition
    B = rng.random((100, 6))
    h, c = 0.2, 1 / 3
    for i in range(6):
        Z = B.copy()
        Z[:, i] = 0
        lhs = revenue(B, h, c) - revenue(Z, h, c)
        rhs = theta_all(B, h, c)[:, i] - theta_all(Z, h, c)[:, i]
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)


@pytest.mark.parametrize("dist", [uniform(), power(1.0)], ids=["uniform", "2t"])
def test_theta_mean_zero_given_own_bid(dist):
    # E over others of theta_i(b_i, b_-i) vanishes when c = E[v^2]
    c = second_moment(dist)
    others = sample(dist, 5, 4, size=400_000)
    B = np.concatenate([np.full((others.shape[0], 1), 0.8), others], axis=1)
    t = theta_all(B, 1.0, c)[:, 0]
    assert abs(t.mean()) <= 3 * t.std(ddof=1) / np.sqrt(t.size)


def test_expected_revenue_formula():
    assert expected_revenue(10, 0.01, 1 / 3, 1 / 3) == pytest.approx(1 / 120)
    B = sample(power(1.0), 9, 6, size=300_000)
    r = revenue(B, 0.1, 0.5)
    assert abs(r.mean() - expected_revenue(6, 0.1, 0.5, 0.5)) <= 3 * r.std(ddof=1) / np.sqrt(r.size)


def test_perturbed_payment():
    params = MechanismParams(n=3, m=1.0, h=0.05, c=1 / 3)
    b = np.array([0.2, 0.9, 0.6])
    mech = SoftSecondPriceK1(params)
    a = alloc_k1(b, 1.0)
    for i in range(3):
        expect = pay_k1(b, i, 1.0) + theta(b, i, 0.05, 1 / 3) / a[i]
        assert pay_perturbed(b, i, params) == pytest.approx(expect, abs=1e-15)
        assert mech.payment(b)[i] == pytest.approx(expect, abs=1e-15)
        ai, pi = mech.user_terms(b, i)
        assert (ai, pi) == pytest.approx((a[i], expect), abs=1e-15)
    assert pay_perturbed(b, 0, params.replace(h=0.0)) == pay_k1(b, 0, 1.0)
    assert "SoftSecondPriceK1" in repr(mech)
    with pytest.raises(ValueError):
        SoftSecondPriceK1(MechanismParams(n=3, k=2))


# -- properties ----------------------------------------------------------------------


@given(bid_vectors, st.floats(0.01, 20.0), st.randoms(use_true_random=False))
def test_symmetry(b, m, rnd):
    perm = list(range(b.size))
    rnd.shuffle(perm)
    np.testing.assert_allclose(alloc_k1(b[perm], m), alloc_k1(b, m)[perm], atol=1e-15)
    np.testing.assert_allclose(pay_k1_all(b[perm], m), pay_k1_all(b, m)[perm], atol=1e-13)


@given(bid_vectors, st.floats(0.0, 50.0))
def test_allocation_sums_to_one(b, m):
    assert alloc_k1(b, m).sum() == pytest.approx(1.0, abs=1e-12)


@given(bid_vectors, st.floats(0.01, 20.0), st.floats(0.0, 1.0))
def test_monotone_in_own_bid_and_competitive(b, m, t):
    up = b.copy()
    up[0] = max(b[0], t)
    a, a_up = alloc_k1(b, m), alloc_k1(up, m)
    assert a_up[0] >= a[0] - 1e-15
    assert np.all(a_up[1:] <= a[1:] + 1e-15)


@given(bid_vectors, st.floats(0.05, 10.0))
def test_uir_and_nfl_without_perturbation(b, m):
    p = pay_k1_all(b, m)
    assert np.all(p <= b + 1e-12)
    assert np.all(p >= -1e-12)
    z = b.copy()
    z[0] = 0.0
    assert abs(pay_k1_all(z, m)[0]) <= 1e-12


@given(bid_vectors, st.floats(0.1, 5.0), st.floats(0.0, 0.5))
def test_difference_identity(b, m, h):
    """[a_i p_i - r](b) - [a_i p_i - r](0, b_-i) equals the integral of t d a_i(t)."""
    mech = SoftSecondPriceK1(MechanismParams(n=b.size, m=m, h=h, c=0.4))
    i = 0
    zero = b.copy()
    zero[i] = 0.0
    lhs = 0.0
    for vec, sign in ((b, 1.0), (zero, -1.0)):
        a, p = mech.user_terms(vec, i)
        lhs += sign * (a * p - mech.revenue(vec))
    others = np.exp(m * b[1:]).sum()

    def t_slope(t):
        a = np.exp(m * t) / (np.exp(m * t) + others)
        return t * m * a * (1 - a)

    rhs = integrate.quad(t_slope, 0.0, b[i], epsabs=1e-13)[0]
    assert lhs == pytest.approx(rhs, abs=1e-9)
