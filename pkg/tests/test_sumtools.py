"""Power sums, polygamma batches, Fresnel integrals, linear moment sums."""

import math
from fractions import Fraction

import gmpy2
import mpmath as mp
import pytest
from gmpy2 import mpc, mpfr

from powerchar.numerics import working_precision
from powerchar.sumtools import (
    bernoulli_fr,
    faulhaber_power_sum,
    fresnel_e,
    hurwitz_int_batch,
    linear_moment_sums,
    linear_sum,
    psi_batch,
    range_power_sum,
    two_sided_tail_inverse_power_sums,
)

mp.mp.dps = 40


def test_bernoulli_values():
    assert bernoulli_fr(0) == 1
    assert bernoulli_fr(1) == Fraction(-1, 2)
    assert bernoulli_fr(2) == Fraction(1, 6)
    assert bernoulli_fr(3) == 0
    assert bernoulli_fr(12) == Fraction(-691, 2730)


@pytest.mark.parametrize("t,K", [(0, 10), (1, 100), (3, 57), (7, 1000), (12, 31)])
def test_faulhaber_exact(t, K):
    with working_precision(256):
        got = faulhaber_power_sum(t, K)
        want = sum(k**t for k in range(K))
        assert abs(got - want) < mpfr(want + 1) * mpfr(2) ** -200


def test_psi_batch_against_mpmath():
    with working_precision(128):
        got = psi_batch(mpfr("0.3"), 4, -100)
    for r in range(5):
        want = mp.polygamma(r, mp.mpf("0.3")) if r else mp.digamma(mp.mpf("0.3"))
        assert abs(float(got[r]) - float(want)) < 1e-25 + abs(float(want)) * 1e-14


def test_hurwitz_int_batch_against_mpmath():
    with working_precision(128):
        got = hurwitz_int_batch(mpfr("1.7"), 5, -100)
    for p in range(2, 6):
        want = mp.zeta(p, mp.mpf("1.7"))
        assert abs(float(got[p]) - float(want)) < abs(float(want)) * 1e-14
    assert abs(float(got[1]) - float(-mp.digamma(mp.mpf("1.7")))) < 1e-14


@pytest.mark.parametrize(
    "pw,ma,mb,c",
    [(0, 3, 17, 0.5), (2, -4, 9, 0.25), (3, 0, 50, -2.5), (-2, 10, 40, 1.5), (-1, 5, 25, 0.0)],
)
def test_range_power_sum_brute(pw, ma, mb, c):
    with working_precision(128):
        got = range_power_sum(mpfr(c), pw, ma, mb)
        want = sum(mpfr(m - c) ** pw for m in range(ma, mb + 1))
        assert abs(got - want) < abs(want) * 1e-25 + mpfr(2) ** -90


def test_two_sided_tails_against_mpmath():
    c, m_lo, m_hi, pmax = mpfr("10.3"), 4, 17, 4
    xl, xr = mp.mpf("7.3"), mp.mpf("7.7")  # c - m_lo + 1, m_hi + 1 - c
    with working_precision(160):
        got = two_sided_tail_inverse_power_sums(c, pmax, m_lo, m_hi, -120)
    # left tail sum_{m<m_lo}(c-m)^-p = zeta(p, xl); right picks up (-1)^p
    assert abs(float(got[1]) - float(mp.digamma(xr) - mp.digamma(xl))) < 1e-14
    for p in range(2, pmax + 1):
        want = mp.zeta(p, xl) + (-1) ** p * mp.zeta(p, xr)
        assert abs(float(got[p]) - float(want)) < 1e-14


def test_fresnel_against_mpmath():
    with working_precision(128):
        for x in ("0.1", "0.9", "2.3", "7.7", "40.0"):
            got = fresnel_e(mpfr(x), -100)
            s, c = mp.fresnels(mp.mpf(x)), mp.fresnelc(mp.mpf(x))
            assert abs(complex(got) - complex(float(c), float(s))) < 1e-20


def test_fresnel_odd():
    with working_precision(96):
        assert abs(fresnel_e(mpfr("-1.3"), -80) + fresnel_e(mpfr("1.3"), -80)) == 0


@pytest.mark.parametrize("gamma", [0.0, 1e-9, 0.001, 0.25, 0.4999, 0.75])
@pytest.mark.parametrize("K", [3, 50, 1000, 20000])
def test_linear_moment_sums_brute(gamma, K):
    imax = 4
    with working_precision(128):
        got = linear_moment_sums(mpfr(gamma), K, imax, -100)
        two_pi_i = 2j * math.pi
        for i in range(imax + 1):
            want = mpc(0)
            t = 2 * gmpy2.const_pi() * mpfr(gamma)
            s, c = gmpy2.sin_cos(t)
            z = mpc(c, s)
            zk = mpc(1)
            for k in range(K):
                want += mpfr(k) ** i * zk
                zk *= z
            scale = max(1.0, float(abs(want)))
            assert abs(got[i] - want) < scale * 1e-20, (gamma, K, i)


def test_linear_sum_matches_moments(rng):
    K = 5000
    gamma = mpfr("0.123456")
    coeffs = [mpc(1.0), mpc(0, -2.0), mpc(0.5)]
    with working_precision(128):
        got = linear_sum(coeffs, K, K, gamma, -100)
        V = linear_moment_sums(gamma, K, 2, -100)
        want = sum(coeffs[d] * V[d] / mpfr(K) ** d for d in range(3))
        assert abs(got - want) < 1e-20
