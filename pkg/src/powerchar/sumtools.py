"""Building blocks for quadratic exponential sums.

Everything here works in the ambient gmpy2 context precision set by the
caller.  The pieces:

* Bernoulli numbers (exact fractions, cached) and Faulhaber power sums;
* batched polygamma values psi^(r)(x) for r = 0..rmax at one point, used for
  one-sided sums of inverse powers sum (m - c)^(-p);
* range_power_sum: sum_{m=ma}^{mb} (m - c)^pw for integer pw of either sign;
* the Fresnel integral E(x) = int_0^x e^{i pi t^2 / 2} dt;
* linear_moment_sums / linear_sum: sums of k^i e(gamma k) over 0 <= k < K by
  direct, Taylor-absorb, or stabilized geometric recursion, picked by the
  size of 2*pi*dist(gamma, Z)*K.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

import gmpy2
import mpmath
from gmpy2 import mpc, mpfr

from .numerics import e_phase_mpfr

# thresholds: Taylor-absorption of e(x) is used while the max series term
# stays below e^THETA_ABS (costs ~1.5*THETA_ABS guard bits); beyond that the
# geometric recursion contracts.
THETA_ABS = 40.0
DIRECT_K = 64


@lru_cache(maxsize=None)
def bernoulli_fr(n):
    """Exact Bernoulli number B_n as a Fraction (B_1 = -1/2)."""
    if n == 1:
        return Fraction(-1, 2)
    p, q = mpmath.bernfrac(n)
    return Fraction(int(p), int(q))


@lru_cache(maxsize=None)
def _faulhaber_exact(t, K):
    """sum_{k=0}^{K-1} k^t as an exact integer, t >= 1."""
    total = Fraction(0)
    kpow = Fraction(K) ** (t + 1)
    for r in range(t + 1):
        b = bernoulli_fr(r)
        if b:
            total += comb(t + 1, r) * b * kpow
        kpow /= K
    v = total / (t + 1)
    assert v.denominator == 1
    return v.numerator


def faulhaber_power_sum(t, K):
    """sum_{k=0}^{K-1} k^t as an mpfr (ambient precision), t >= 0.

    Uses sum = (1/(t+1)) sum_r C(t+1, r) B_r K^(t+1-r); the value is an exact
    integer and is cached as such, so repeated calls (blocked character sums
    reuse the same K with many t) cost one int-to-mpfr rounding.
    """
    if t == 0:
        return mpfr(K)
    return mpfr(_faulhaber_exact(t, K))


# ---------------------------------------------------------------------------
# polygamma / inverse power sums


_psi_cache = {}


def psi_batch(x, rmax, tol_log2):
    """[psi(x), psi'(x), ..., psi^(rmax)(x)] at real x > 0 (mpfr).

    Results are cached per (x, tol, precision): a batch computed at a larger
    rmax shifts x at least as far, so its prefix serves smaller requests.
    """
    x = mpfr(x)
    bits = gmpy2.get_context().precision
    key = (x, tol_log2, bits)
    hit = _psi_cache.get(key)
    if hit is not None and len(hit) > rmax:
        return hit[: rmax + 1]
    out = _psi_batch_core(x, rmax, tol_log2)
    if len(_psi_cache) > 4096:
        _psi_cache.clear()
    _psi_cache[key] = out
    return list(out)


def _psi_batch_core(x, rmax, tol_log2):
    if x <= 0:
        raise ValueError("psi_batch needs x > 0")
    xmin = max(rmax + 8, int(-tol_log2 * 0.12) + 8)
    # collect the shift corrections psi^(r)(x) = psi^(r)(X) - sum d^r(1/u)
    shift = [mpfr(0)] * (rmax + 1)
    X = x
    while X < xmin:
        inv = 1 / X
        term = inv
        fact = 1
        for r in range(rmax + 1):
            # d^r/du^r (1/u) = (-1)^r r! u^(-r-1); psi^(r)(u) = psi^(r)(u+1) - that
            shift[r] -= (fact if r % 2 == 0 else -fact) * term
            term *= inv
            fact *= r + 1
        X += 1
    # asymptotic: psi(X) = ln X - 1/(2X) - sum B_2k/(2k X^2k)
    #             psi^(r)(X) = (-1)^(r-1)[(r-1)!/X^r + r!/(2X^(r+1))
    #                          + sum B_2k (2k+r-1)!/((2k)! X^(2k+r))]
    out = [mpfr(0)] * (rmax + 1)
    invX = 1 / X
    invX2 = invX * invX
    out[0] = gmpy2.log(X) - invX / 2
    fact = 1
    xp = invX
    for r in range(1, rmax + 1):
        # (r-1)!/X^r + r!/(2 X^(r+1))
        val = fact * xp * (1 + r * invX / 2)
        out[r] = val if (r - 1) % 2 == 0 else -val
        fact *= r
        xp *= invX
    tol = mpfr(2) ** tol_log2
    k = 1
    # running factors: B_2k/(2k)! * (2k+r-1)! / X^(2k+r) for each r
    base = invX2  # X^(-2k)
    while True:
        b = bernoulli_fr(2 * k)
        bq = mpfr(b.numerator) / b.denominator
        # r = 0 term: B_2k/(2k) X^(-2k)
        t0 = bq / (2 * k) * base
        out[0] -= t0
        # r >= 1: B_2k * (2k+r-1)!/((2k)!) * X^(-2k-r)
        fac = mpfr(1)  # (2k+r-1)!/(2k)! built incrementally: r=1 -> (2k)!/(2k)! = 1? no:
        # (2k+0)!/(2k)! = 1 at r=1 gives (2k+1-1)! /(2k)! = 1
        xpr = base * invX
        biggest = abs(t0)
        for r in range(1, rmax + 1):
            tr = bq * fac * xpr
            out[r] += tr if (r - 1) % 2 == 0 else -tr
            biggest = max(biggest, abs(tr))
            fac *= 2 * k + r
            xpr *= invX
        if biggest < tol or k > 4 * xmin:
            break
        base *= invX2
        k += 1
    return [out[r] + shift[r] for r in range(rmax + 1)]


def hurwitz_int_batch(x, pmax, tol_log2):
    """[None, S_1(x), S_2(x), ..., S_pmax(x)] with S_p = sum_{n>=0} (x+n)^-p.

    S_1 diverges; slot 1 holds -psi(x) instead (so S_1(x) - S_1(y) is the
    correct difference psi(y) - psi(x) of the callers' pairings).
    """
    psis = psi_batch(x, pmax - 1, tol_log2) if pmax >= 1 else []
    out = [None] * (pmax + 1)
    if pmax >= 1:
        out[1] = -psis[0]
    fact = 1
    for p in range(2, pmax + 1):
        fact *= p - 1
        v = psis[p - 1] / fact
        out[p] = v if p % 2 == 0 else -v
    return out


def range_power_sum(c, pw, ma, mb, tol_log2=-120):
    """sum_{m=ma}^{mb} (m - c)^pw, integer pw (either sign), real c (mpfr).

    For pw < 0 the range must lie strictly on one side of c.
    """
    if ma > mb:
        return mpfr(0)
    c = mpfr(c)
    n = mb - ma + 1
    if pw == 0:
        return mpfr(n)
    if pw > 0:
        # Bernoulli-polynomial difference with the x^t - y^t factorization
        # (x - y = n exact) to dodge cancellation
        x = mpfr(mb + 1) - c
        y = mpfr(ma) - c
        deg = pw + 1
        total = mpfr(0)
        for k in range(deg):
            b = bernoulli_fr(k)
            if not b:
                continue
            t = deg - k
            # x^t - y^t = n * sum_{i<t} x^i y^(t-1-i)
            acc = mpfr(0)
            xp = mpfr(1)
            for i in range(t):
                acc += xp * y ** (t - 1 - i)
                xp *= x
            total += comb(deg, k) * mpfr(b.numerator) / b.denominator * n * acc
        return total / deg
    # negative power: one-sided
    p = -pw
    if mb < c:
        # (m-c)^pw = (-1)^p (c-m)^-p, c-m from c-mb upward
        s = _zeta_diff(p, c - mb, n, tol_log2)
        return s if p % 2 == 0 else -s
    if ma > c:
        return _zeta_diff(p, mpfr(ma) - c, n, tol_log2)
    raise ValueError("negative-power range straddles c")


def _zeta_diff(p, x, n, tol_log2):
    """sum_{k=0}^{n-1} (x+k)^-p for x > 0, p >= 1."""
    if n <= 24 or p == 0:
        total = mpfr(0)
        for k in range(n):
            total += (x + k) ** (-p)
        return total
    a = hurwitz_int_batch(x, p, tol_log2)
    b = hurwitz_int_batch(x + n, p, tol_log2)
    return a[p] - b[p]


def two_sided_tail_inverse_power_sums(c, pmax, m_lo, m_hi, tol_log2):
    """s_p = sum over m < m_lo and m > m_hi of (c - m)^(-p), p = 1..pmax.

    Requires m_lo <= c <= m_hi (distances >= the caller's margin).  p = 1 is
    the symmetric principal value; it equals psi(m_hi+1-c) - psi(c-m_lo+1).
    Returns a list indexed by p (slot 0 unused).
    """
    xl = c - m_lo + 1  # left tail: c - m for m = m_lo-1, m_lo-2, ...
    xr = m_hi + 1 - c  # right tail: m - c for m = m_hi+1, ...
    L = hurwitz_int_batch(xl, pmax, tol_log2)
    R = hurwitz_int_batch(xr, pmax, tol_log2)
    out = [None] * (pmax + 1)
    if pmax >= 1:
        out[1] = -R[1] + L[1]  # psi(xr) - psi(xl)
    for p in range(2, pmax + 1):
        out[p] = L[p] + (R[p] if p % 2 == 0 else -R[p])
    return out


# ---------------------------------------------------------------------------
# Fresnel integral


def fresnel_e(x, tol_log2):
    """E(x) = int_0^x e^{i pi t^2/2} dt to ~2^tol_log2 absolute error."""
    x = mpfr(x)
    if x < 0:
        return -fresnel_e(-x, tol_log2)
    if x == 0:
        return mpc(0)
    y = gmpy2.const_pi() * x * x / 2
    tol = mpfr(2) ** tol_log2
    if y < max(30, 1.15 * (-tol_log2) * 0.70):
        # power series sum_s (i pi/2)^s x^(2s+1) / (s! (2s+1)), max term ~ e^y
        guard = int(float(y) * 1.5) + 16
        ctx = gmpy2.get_context()
        old = ctx.precision
        gmpy2.set_context(gmpy2.context(precision=old + guard))
        try:
            xx = mpfr(x)
            z = mpc(0, gmpy2.const_pi() / 2) * xx * xx
            term = mpc(xx)
            total = mpc(0)
            s = 0
            while True:
                total += term / (2 * s + 1)
                s += 1
                term *= z / s
                if abs(term) < tol:
                    break
            res = mpc(total)
        finally:
            gmpy2.set_context(gmpy2.context(precision=old))
        return mpc(res)
    # asymptotic: E(x) = e^{i pi/4}/sqrt(2) - e^{i y} * sum_p c_p x^(-2p-1),
    # c_0 = -1/(i pi) ... c_{p+1} = c_p (2p+1)/(i pi x^2)
    ipi = mpc(0, gmpy2.const_pi())
    inv_x2 = 1 / (x * x)
    term = mpc(-1) / ipi / x
    total = mpc(0)
    p = 0
    prev = None
    while True:
        total += term
        mag = abs(term)
        if mag < tol:
            break
        if prev is not None and mag > prev:
            # asymptotic bottomed out above tol; caller chose a bad branch
            raise ArithmeticError("fresnel asymptotic series stalled")
        prev = mag
        term *= (2 * p + 1) * inv_x2 / ipi
        p += 1
    eiy = gmpy2.exp(mpc(0, 1) * y)
    corner = gmpy2.exp(mpc(0, gmpy2.const_pi() / 4)) / gmpy2.sqrt(mpfr(2))
    return corner - eiy * total


# ---------------------------------------------------------------------------
# linear-phase moment sums


def linear_moment_sums(gamma, K, imax, tol_log2):
    """[V_0..V_imax], V_i = sum_{0<=k<K} k^i e(gamma k); gamma mpfr, K int.

    Path choice by t = 2*pi*dist(gamma, Z)*(K-1): direct for small K,
    Taylor-absorb for t <= max(THETA_ABS, 4*imax), else geometric recursion.
    """
    if K <= 0:
        return [mpfr(0)] * (imax + 1)
    gamma = mpfr(gamma)
    gtilde = gamma - gmpy2.rint(gamma)  # signed distance to nearest integer
    two_pi = 2 * gmpy2.const_pi()
    t_osc = abs(two_pi * gtilde) * max(K - 1, 1)
    if K <= max(DIRECT_K, 2 * imax + 16):
        return _moments_direct(gtilde, K, imax)
    if t_osc <= THETA_ABS:
        return _moments_absorb(gtilde, K, imax, tol_log2)
    if t_osc > max(THETA_ABS, 4.0 * (imax + 1)):
        return _moments_geometric(gamma, gtilde, K, imax)
    # in between neither path is safe at this degree: halve and recombine,
    # sum_{k>=K1} k^i e(g k) = e(g K1) sum_t C(i,t) K1^(i-t) V'_t
    K1 = K // 2
    V1 = linear_moment_sums(gamma, K1, imax, tol_log2)
    V2 = linear_moment_sums(gamma, K - K1, imax, tol_log2)
    zK1 = gmpy2.exp(mpc(0, two_pi) * _mul_mod1(gamma, K1))
    out = []
    for i in range(imax + 1):
        shift = mpc(0)
        for t in range(i + 1):
            shift += comb(i, t) * mpfr(K1) ** (i - t) * V2[t]
        out.append(V1[i] + zK1 * shift)
    return out


def _moments_direct(gtilde, K, imax):
    out = [mpc(0)] * (imax + 1)
    # phases by first differences, re-anchored every 32 steps so the
    # multiplicative drift stays within a few dozen ulps
    u = e_phase_mpfr(gtilde) if K > 1 else None
    z = mpc(1)
    for k in range(K):
        if k % 32 == 0:
            z = e_phase_mpfr(gtilde * k)
        kp = mpfr(1)
        for i in range(imax + 1):
            out[i] += kp * z
            kp *= k
        if u is not None:
            z *= u
    return out


def _moments_absorb(gtilde, K, imax, tol_log2):
    # e(gtilde k) = sum_t (2 pi i gtilde)^t k^t / t!; max term ~ e^t_osc,
    # so work with extra guard bits against the cancellation
    ctx = gmpy2.get_context()
    old = ctx.precision
    gmpy2.set_context(gmpy2.context(precision=old + int(1.5 * THETA_ABS) + 16))
    try:
        return _moments_absorb_core(mpfr(gtilde), K, imax, tol_log2)
    finally:
        gmpy2.set_context(gmpy2.context(precision=old))


def _moments_absorb_core(gtilde, K, imax, tol_log2):
    two_pi_i = mpc(0, 2 * gmpy2.const_pi())
    w = two_pi_i * gtilde
    tol = mpfr(2) ** (tol_log2 - 8)
    # series coefficients a_t = w^t/t! until |a_t| K^t (relative) is dead
    coeffs = [mpc(1)]
    term = mpc(1)
    t = 0
    bound = mpfr(1)
    KB = mpfr(max(K - 1, 1))
    while True:
        t += 1
        term *= w / t
        coeffs.append(term)
        bound = abs(term) * KB**t
        if bound < tol and t >= 4:
            break
        if t > 4 * THETA_ABS + 8 * max(1, -tol_log2) // 4:
            raise ArithmeticError("absorb series did not converge")
    out = []
    # V_i = sum_t a_t * faulhaber(i + t)
    fh = {}
    for i in range(imax + 1):
        total = mpc(0)
        for t2, a in enumerate(coeffs):
            n = i + t2
            if n not in fh:
                fh[n] = faulhaber_power_sum(n, K)
            total += a * fh[n]
        out.append(total)
    return out


def _moments_geometric(gamma, gtilde, K, imax):
    two_pi_i = mpc(0, 2 * gmpy2.const_pi())
    z = gmpy2.exp(two_pi_i * gtilde)
    zK = gmpy2.exp(two_pi_i * _mul_mod1(gamma, K))
    one_minus = 1 - z
    V = [mpc(0)] * (imax + 1)
    V[0] = (1 - zK) / one_minus
    Bi = mpfr(K - 1)
    for i in range(1, imax + 1):
        acc = -zK * Bi**i
        sign = -1  # (-1)^(i-r+1) for r = i-1 is +1; build by parity
        for r in range(i - 1, -1, -1):
            sgn = 1 if (i - r + 1) % 2 == 0 else -1
            term = V[r] - (1 if r == 0 else 0)
            acc += sgn * comb(i, r) * term
        V[i] = acc / one_minus
        del sign
    return V


def _mul_mod1(x, n):
    """x*n mod 1 for mpfr x, int n, without losing the fractional part."""
    total = x * n
    return total - gmpy2.floor(total)


def linear_sum(coeffs, bhat, K, gamma, tol_log2):
    """sum_{0<=k<K} P(k/bhat) e(gamma k) with P given by coeffs (mpc list)."""
    V = linear_moment_sums(gamma, K, len(coeffs) - 1, tol_log2)
    total = mpc(0)
    scale = mpfr(1)
    bh = mpfr(bhat)
    for d, cd in enumerate(coeffs):
        if cd:
            total += cd * V[d] * scale
        scale /= bh
    return total
