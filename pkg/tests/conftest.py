"""Shared oracles and character builders for the test suite.

Everything here is deliberately independent of the library's fast paths:
direct summation uses numpy double-double phase arithmetic, and L-values come
from mpmath's Hurwitz zeta.  Oracle roundoff is ~1e-12 absolute at worst, far
below every tolerance used against it.
"""

from __future__ import annotations

import random
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from powerchar.character import (
    CharacterSpec,
    eval_char,
    factorize,
    precompute_tables,
)

mp.mp.dps = 40


# ---------------------------------------------------------------------------
# character builders


def random_spec(q, rng, principal_ok=False):
    """A random character spec mod q (non-principal unless asked)."""
    factors = factorize(q)
    for _ in range(64):
        exps = {}
        two = None
        for p, a in factors:
            if p == 2 and a >= 3:
                two = (rng.randrange(2), rng.randrange(2 ** (a - 2)))
            else:
                exps[p] = rng.randrange((p - 1) * p ** (a - 1)) if p != 2 or a == 2 else 0
        spec = CharacterSpec.from_exponents(factors, omega_exps=exps, two_adic=two)
        if principal_ok or not spec.is_principal:
            return spec
    raise AssertionError("could not draw a non-principal character mod %d" % q)


def random_primitive_spec(q, rng):
    for _ in range(256):
        spec = random_spec(q, rng)
        if spec.is_primitive():
            return spec
    raise AssertionError("could not draw a primitive character mod %d" % q)


def legendre_spec(p):
    """The quadratic character mod an odd prime p."""
    return CharacterSpec.from_exponents(p, omega_exps={p: (p - 1) // 2})


def real_primitive_specs(q_max):
    """All real primitive characters with modulus <= q_max (one per modulus
    shape): Legendre mod odd primes, the mod-4 and two mod-8 characters, and
    their pairwise products."""
    from powerchar.character import is_prime

    out = []
    odd_primes = [p for p in range(3, q_max + 1) if is_prime(p)]
    for p in odd_primes:
        out.append(legendre_spec(p))
    if q_max >= 4:
        out.append(CharacterSpec.from_exponents([(2, 2)], omega_exps={2: 1}))
    if q_max >= 8:
        out.append(CharacterSpec.from_exponents([(2, 3)], two_adic=(0, 1)))
        out.append(CharacterSpec.from_exponents([(2, 3)], two_adic=(1, 1)))
    for p in odd_primes:
        if 4 * p <= q_max:
            out.append(
                CharacterSpec.from_exponents(
                    [(2, 2), (p, 1)], omega_exps={2: 1, p: (p - 1) // 2}
                )
            )
        if 8 * p <= q_max:
            out.append(
                CharacterSpec.from_exponents(
                    [(2, 3), (p, 1)], omega_exps={p: (p - 1) // 2}, two_adic=(0, 1)
                )
            )
    return out


# ---------------------------------------------------------------------------
# direct-summation oracles (numpy, double-double phases)


def chi_complex_table(spec, tables):
    """chi over one period as complex128 (exact phases through float64 trig)."""
    q = spec.q
    out = np.zeros(q if q > 1 else 1, dtype=np.complex128)
    for c in range(q):
        v = eval_char(spec, tables, c)
        if not v.is_zero:
            out[c] = np.exp(2j * np.pi * (v.num / v.den))
    return out


def _two_prod(a, b):
    p = a * b
    split = 134217729.0  # 2^27 + 1
    a1 = a * split
    ah = a1 - (a1 - a)
    al = a - ah
    b1 = b * split
    bh = b1 - (b1 - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quad_phase_terms(K, alpha, beta):
    """e(alpha k + beta k^2) for 0 <= k < K, phases in double-double."""
    a = float(Fraction(alpha) % 1) if isinstance(alpha, Fraction) else float(alpha) % 1.0
    b = float(Fraction(beta) % 1) if isinstance(beta, Fraction) else float(beta) % 1.0
    a_lo = float((Fraction(alpha) % 1) - Fraction(a)) if isinstance(alpha, Fraction) else 0.0
    b_lo = float((Fraction(beta) % 1) - Fraction(b)) if isinstance(beta, Fraction) else 0.0
    k = np.arange(K, dtype=np.float64)
    p1, e1 = _two_prod(a, k)
    e1 += a_lo * k
    q1, qe = _two_prod(k, k)
    p2, e2 = _two_prod(b, q1)
    e2 += b * qe + b_lo * q1
    hi, lo = _two_sum(p1, p2)
    lo += e1 + e2
    hi = hi - np.round(hi)
    ph, pl = _two_sum(hi, lo)
    return np.exp(2j * np.pi * (ph + pl))


def direct_twisted(spec, tables, K, v, j, alpha, beta):
    """K^(-j) sum k^j chi(v+k) e(alpha k + beta k^2) by direct summation."""
    chi = chi_complex_table(spec, tables)
    idx = (np.arange(K, dtype=np.int64) + v) % spec.q
    terms = chi[idx] * quad_phase_terms(K, alpha, beta)
    if j:
        terms *= (np.arange(K, dtype=np.float64) / K) ** j
    return complex(terms.sum())


def direct_char_sum(spec, tables, K):
    chi = chi_complex_table(spec, tables)
    idx = np.arange(K, dtype=np.int64) % spec.q
    return complex(chi[idx].sum())


def direct_real_char_sum(spec, tables, L):
    """Exact integer sum of a real character over [0, L)."""
    q = spec.q
    total = 0
    for m in range(L):
        v = eval_char(spec, tables, m % q)
        if not v.is_zero:
            total += -1 if 2 * v.num == v.den else 1
    return total


# ---------------------------------------------------------------------------
# L-value oracles


def hurwitz_L(spec, tables, s):
    """L(s, chi) = q^(-s) sum_r chi(r) zeta(s, r/q) via mpmath (s != 1)."""
    q = spec.q
    zs = mp.mpc(s.real, s.imag)
    tot = mp.mpc(0)
    for r in range(1, q + 1):
        chi = eval_char(spec, tables, r % q)
        if chi.is_zero:
            continue
        ph = chi.phase().r
        tot += mp.expjpi(2 * mp.mpf(ph.numerator) / ph.denominator) * mp.zeta(
            zs, mp.mpf(r) / q
        )
    return complex(tot * mp.power(q, -zs))


def digamma_L1(spec, tables):
    """L(1, chi) = -(1/q) sum_r chi(r) psi(r/q) for non-principal chi."""
    q = spec.q
    tot = mp.mpc(0)
    for r in range(1, q):
        chi = eval_char(spec, tables, r)
        if chi.is_zero:
            continue
        ph = chi.phase().r
        tot += mp.expjpi(2 * mp.mpf(ph.numerator) / ph.denominator) * mp.digamma(
            mp.mpf(r) / q
        )
    return complex(-tot / q)


def l_oracle(spec, tables, s):
    if abs(complex(s) - 1) < 1e-12:
        return digamma_L1(spec, tables)
    return hurwitz_L(spec, tables, s)


# ---------------------------------------------------------------------------
# fixtures


@pytest.fixture
def rng():
    return random.Random(20260826)


@pytest.fixture(scope="session")
def tables_cache():
    cache = {}

    def get(spec):
        key = spec.to_json()
        if key not in cache:
            cache[key] = precompute_tables(spec)
        return cache[key]

    return get
