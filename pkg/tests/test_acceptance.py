"""End-to-end acceptance: one test per shipped accuracy/performance claim.

Each test prints a single `criterion NN: PASS/FAIL` line (visible with -s);
under plain `pytest -v` the per-test PASSED/FAILED line carries the same
information.  The heavy sweeps (exhaustive dlog grid, 10^4 theta queries,
the full L-value corpus and its quadruple-precision audit) live here rather
than in the per-module files; expect a couple of hours for the full run.
"""

import math
import random
import time
from fractions import Fraction
from math import gcd

import numpy as np
import pytest

import powerchar.numerics
from powerchar.character import (
    CharacterSpec,
    eval_char,
    factorize,
    find_primitive_root,
    is_prime,
    precompute_tables,
)
from powerchar.dualsum import dual_char_sum, stats as dual_stats
from powerchar.lfunction import LQuery, functional_equation_check, l_value
from powerchar.postnikov import postnikov_data
from powerchar.numerics import mod1
from powerchar.theta import theta_fast
from powerchar.twisted import char_sum, gauss_sum, twisted_theta
from conftest import (
    chi_complex_table,
    direct_real_char_sum,
    l_oracle,
    legendre_spec,
    quad_phase_terms,
    random_spec,
    real_primitive_specs,
)

SEED = 0x5EED


def report(n, ok, detail=""):
    print("criterion %02d: %s  %s" % (n, "PASS" if ok else "FAIL", detail), flush=True)
    assert ok, "criterion %d failed: %s" % (n, detail)


def prime_powers_upto(limit):
    out = []
    for p in range(2, limit + 1):
        if not is_prime(p):
            continue
        q = p
        a = 1
        while q <= limit:
            out.append((p, a, q))
            q *= p
            a += 1
    return out


# ---------------------------------------------------------------------------
# 1. character oracle equivalence (exhaustive dlog grid)


def test_criterion_01_character_dlog_exhaustive():
    checked = 0
    for p, a, q in prime_powers_upto(3000):
        if p == 2:
            ok = _check_two_adic_modulus(a, q)
        else:
            ok = _check_odd_modulus(p, a, q)
        if not ok:
            report(1, False, "mismatch at q = %d" % q)
        checked += 1
    report(1, True, "%d prime powers, all characters, all residues" % checked)


def _check_odd_modulus(p, a, q):
    phi = (p - 1) * p ** (a - 1)
    g = find_primitive_root(p, a)
    brute = {}
    acc = 1
    for x in range(phi):
        brute[acc] = x
        acc = acc * g % q
    tables = None
    for w in range(phi):
        spec = CharacterSpec.from_exponents([(p, a)], omega_exps={p: w}, roots={p: g})
        if tables is None:
            tables = precompute_tables(spec)
        for c in range(q):
            got = eval_char(spec, tables, c)
            if c % p == 0:
                if not got.is_zero:
                    return False
                continue
            e = w * brute[c] % phi
            d = gcd(e, phi)
            if (got.num, got.den) != ((e // d) % (phi // d), phi // d):
                return False
    return True


def _check_two_adic_modulus(a, q):
    if a <= 2:
        shapes = [(w,) for w in range(1 if a == 1 else 2)]
    else:
        shapes = [(e1, e2) for e1 in range(2) for e2 in range(2 ** (a - 2))]
    # brute decomposition c = (-1)^v1 5^v2 mod 2^a
    brute = {}
    if a >= 3:
        acc = 1
        for v2 in range(2 ** (a - 2)):
            brute[acc] = (0, v2)
            brute[(-acc) % q] = (1, v2)
            acc = acc * 5 % q
    for sh in shapes:
        if a <= 2:
            spec = CharacterSpec.from_exponents([(2, a)], omega_exps={2: sh[0]})
        else:
            spec = CharacterSpec.from_exponents([(2, a)], two_adic=sh)
        tables = precompute_tables(spec)
        for c in range(q):
            got = eval_char(spec, tables, c)
            if c % 2 == 0:
                if not got.is_zero:
                    return False
                continue
            if a == 1:
                want = Fraction(0)
            elif a == 2:
                want = Fraction(sh[0] if c % 4 == 3 else 0, 2)
            else:
                v1, v2 = brute[c]
                want = mod1(Fraction(sh[0] * v1, 2) + Fraction(sh[1] * v2, 2 ** (a - 2)))
            if got.is_zero or Fraction(got.num, got.den) != want:
                return False
    return True


# ---------------------------------------------------------------------------
# 2. quadratic phase identity on 1 + p^b x


def test_criterion_02_progression_identity():
    rng = random.Random(SEED)
    moduli = [3**3, 3**5, 5**3, 5**4, 7**3, 2**4, 2**7, 2, 4, 8]
    total = 0
    for q in moduli:
        ((p, a),) = factorize(q)
        if p == 2 and a >= 3:
            shapes = [(e1, e2) for e1 in range(2) for e2 in range(2 ** (a - 2))]
            specs = [CharacterSpec.from_exponents([(p, a)], two_adic=sh) for sh in shapes]
        else:
            phi = (p - 1) * p ** (a - 1)
            specs = [
                CharacterSpec.from_exponents([(p, a)], omega_exps={p: w})
                for w in range(phi)
            ]
        if len(specs) > 50:
            specs = rng.sample(specs, 50)
        for spec in specs:
            tables = precompute_tables(spec)
            data = postnikov_data(spec, tables, spec.components[0])
            b = data.b
            step = p**b
            for x in range(p ** (a - b)):
                got = eval_char(spec, tables, (1 + step * x) % q)
                want = mod1(data.lin.r * x + data.quad.r * x * x)
                if got.is_zero or Fraction(got.num, got.den) != want:
                    report(2, False, "q=%d x=%d" % (q, x))
            total += 1
    report(2, True, "%d characters over %d moduli, identity exact" % (total, len(moduli)))


# ---------------------------------------------------------------------------
# 3. theta oracle sweep + polylog runtime


def _theta_oracle(K, j, alpha, beta):
    terms = quad_phase_terms(K, alpha, beta)
    if j:
        terms = terms * (np.arange(K, dtype=np.float64) / K) ** j
    return complex(terms.sum())


def test_criterion_03_theta_oracle_sweep():
    rng = random.Random(SEED + 3)
    n_queries = 0
    worst = 0.0
    for _ in range(3400):
        K = rng.randrange(1, 10**6 + 1)
        j = rng.randrange(0, 9)
        alpha, beta = rng.random(), rng.random()
        want = _theta_oracle(K, j, alpha, beta)
        for eps in (1e-6, 1e-10, 1e-14):
            nu = (j + 1) * math.log(K / eps)
            got = complex(theta_fast(K, j, alpha, beta, eps))
            err = abs(got - want)
            bound = 100 * nu**4 * eps + 1e-11  # + oracle roundoff
            if err > bound:
                report(3, False, "K=%d j=%d a=%r b=%r eps=%g err=%g" % (K, j, alpha, beta, eps, err))
            worst = max(worst, err / bound)
            n_queries += 1
    # runtime growth: log-log slope over K = 1e3 .. 1e7
    times = []
    for K in (10**3, 10**4, 10**5, 10**6, 10**7):
        t = min(
            _timed_theta(K, rng.random(), rng.random()) for _ in range(3)
        )
        times.append((math.log(K), math.log(t)))
    xs = np.array([x for x, _ in times])
    ys = np.array([y for _, y in times])
    slope = float(np.polyfit(xs, ys, 1)[0])
    ok = slope <= 0.15
    report(3, ok, "%d queries, worst err/bound %.3g, runtime slope %.3f" % (n_queries, worst, slope))


def _timed_theta(K, alpha, beta):
    t0 = time.perf_counter()
    theta_fast(K, 0, alpha, beta, 1e-10)
    return time.perf_counter() - t0


# ---------------------------------------------------------------------------
# 4. twisted sums vs direct summation


def test_criterion_04_twisted_oracle():
    rng = random.Random(SEED + 4)
    moduli = [3**6, 5**3, 5**6, 2**7 * 3**3]
    n = 0
    for q in moduli:
        spec = random_spec(q, rng)
        tables = precompute_tables(spec)
        chi = chi_complex_table(spec, tables)
        for _ in range(250):
            K = rng.randrange(1, 10**6 + 1)
            j = rng.randrange(0, 6)
            v = rng.randrange(q)
            alpha, beta = rng.random(), rng.random()
            eps = 1e-9
            if rng.random() < 0.3:
                got = complex(char_sum(spec, tables, K, eps))
                idx = np.arange(K, dtype=np.int64) % q
                want = complex(chi[idx].sum())
            else:
                got = complex(twisted_theta(spec, tables, K, v, j, alpha, beta, eps))
                idx = (np.arange(K, dtype=np.int64) + v) % q
                terms = chi[idx] * quad_phase_terms(K, alpha, beta)
                if j:
                    terms = terms * (np.arange(K, dtype=np.float64) / K) ** j
                want = complex(terms.sum())
            if abs(got - want) > eps + 1e-9:  # oracle roundoff allowance
                report(4, False, "q=%d K=%d v=%d j=%d err=%g" % (q, K, v, j, abs(got - want)))
            n += 1
    report(4, True, "%d random draws over %r within eps" % (n, moduli))


# ---------------------------------------------------------------------------
# 5. C-scaling wall time


def test_criterion_05_c_scaling():
    times = {}
    for a in (6, 9, 12):
        q = 5**a
        spec = CharacterSpec.from_exponents([(5, a)], omega_exps={5: 3})
        tables = precompute_tables(spec)
        t0 = time.perf_counter()
        char_sum(spec, tables, q - 1, 1e-8)
        times[a] = time.perf_counter() - t0
    r1 = times[9] / max(times[6], 0.01)
    r2 = times[12] / max(times[9], 0.01)
    ok = times[12] < 10.0 and r1 <= 10.0 and r2 <= 10.0
    report(
        5,
        ok,
        "t(5^6)=%.3fs t(5^9)=%.3fs t(5^12)=%.3fs ratios %.2f, %.2f"
        % (times[6], times[9], times[12], r1, r2),
    )


# ---------------------------------------------------------------------------
# 6 & 10. L-value corpus vs Hurwitz oracle, then the error-budget audit


L_CORPUS_RUNS = []  # populated by criterion 6, audited by criterion 10


def test_criterion_06_l_value_corpus():
    rng = random.Random(SEED + 6)
    moduli = [9, 25, 27, 49, 125, 243, 729]
    s_values = [complex(0.6), complex(0.75, 5.0), complex(0.5, 10.0), complex(1.0)]
    n = 0
    worst = 0.0
    for q in moduli:
        # with replacement: small moduli have fewer than 20 non-principal chars
        specs = [random_spec(q, rng) for _ in range(20)]
        for spec in specs:
            tables = precompute_tables(spec)
            for s in s_values:
                want = l_oracle(spec, tables, s)
                for lam in (0, 1):
                    res = l_value(LQuery(spec=spec, s=s, lam=lam), tables)
                    budget = (q * (abs(s) + 1.0)) ** (-lam)
                    err = abs(complex(res.value) - want)
                    if err > budget + 1e-18:
                        report(6, False, "q=%d s=%s lam=%d err=%g budget=%g" % (q, s, lam, err, budget))
                    worst = max(worst, err / budget)
                    L_CORPUS_RUNS.append((spec, tables, s, lam, res))
                    n += 1
    # spot value: quadratic character mod 3 at s = 1
    spec3 = CharacterSpec.from_exponents(3, omega_exps={3: 1})
    t3 = precompute_tables(spec3)
    res3 = l_value(LQuery(spec=spec3, s=complex(1.0), eps_abs=1e-11), t3)
    spot_err = abs(complex(res3.value) - math.pi / math.sqrt(27))
    if spot_err > 1e-10:
        report(6, False, "spot value q=3 s=1 err=%g" % spot_err)
    report(6, True, "%d corpus runs within budget, worst err/budget %.3g, spot err %.2e" % (n, worst, spot_err))


def test_criterion_10_error_budget_audit():
    assert L_CORPUS_RUNS, "criterion 6 must run first to populate the corpus"
    worst = 0.0
    for spec, tables, s, lam, res in L_CORPUS_RUNS:
        budget = (spec.q * (abs(s) + 1.0)) ** (-lam)
        if sum(res.ledger.values()) > budget:
            report(10, False, "ledger exceeds budget: q=%d s=%s lam=%d" % (spec.q, s, lam))
    powerchar.numerics.precision_scale = 4
    try:
        for spec, tables, s, lam, res in L_CORPUS_RUNS:
            hi = l_value(LQuery(spec=spec, s=s, lam=lam), tables)
            diff = abs(complex(hi.value) - complex(res.value))
            if diff > res.abs_error_bound:
                report(
                    10,
                    False,
                    "4x rerun drift %g > claimed %g (q=%d s=%s lam=%d)"
                    % (diff, res.abs_error_bound, spec.q, s, lam),
                )
            worst = max(worst, diff / res.abs_error_bound)
    finally:
        powerchar.numerics.precision_scale = 1
    report(10, True, "%d ledgers within budget; 4x-precision drift/claimed worst %.3g" % (len(L_CORPUS_RUNS), worst))


# ---------------------------------------------------------------------------
# 7. functional equation defect


def test_criterion_07_functional_equation():
    worst = 0.0
    for q, omega in ((5, {5: 1}), (7, {7: 1}), (9, {3: 1})):
        spec = CharacterSpec.from_exponents(q, omega_exps=omega)
        tables = precompute_tables(spec)
        for s in (complex(0.5), complex(0.5, 1.0), complex(0.5, 2.0)):
            defect = functional_equation_check(spec, tables, s, 1e-10)
            if defect > 1e-8:
                report(7, False, "q=%d s=%s defect=%g" % (q, s, defect))
            worst = max(worst, defect)
    report(7, True, "9 cases, worst defect %.3g <= 1e-8" % worst)


# ---------------------------------------------------------------------------
# 8. Gauss sum magnitude + brute equality


def test_criterion_08_gauss_sums():
    rng = random.Random(SEED + 8)
    draws = []
    while len(draws) < 100:
        a = rng.randrange(1, 6)
        p = rng.choice([3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 101, 997, 9973])
        q = p**a
        if q > 10**5:
            continue
        draws.append((p, a, q))
    worst = 0.0
    n_brute = 0
    for p, a, q in draws:
        spec = None
        for _ in range(64):
            cand = random_spec(q, rng)
            if cand.is_primitive():
                spec = cand
                break
        assert spec is not None
        tables = precompute_tables(spec)
        tau = complex(gauss_sum(spec, tables, 1e-10))
        err = abs(abs(tau) - math.sqrt(q))
        if err > 1e-8:
            report(8, False, "|tau| off by %g at q=%d" % (err, q))
        worst = max(worst, err)
        if q <= 10**4:
            chi = chi_complex_table(spec, tables)
            want = complex((chi * quad_phase_terms(q, Fraction(1, q), 0)).sum())
            if abs(tau - want) > 1e-8:
                report(8, False, "brute mismatch %g at q=%d" % (abs(tau - want), q))
            n_brute += 1
    report(8, True, "100 primitive draws, |tau|-sqrt(q) worst %.3g; %d brute equalities" % (worst, n_brute))


# ---------------------------------------------------------------------------
# 9. dual-sum three-way agreement and crossover


def test_criterion_09_dual_sum():
    rng = random.Random(SEED + 9)
    pool = real_primitive_specs(5000)
    worst = 0.0
    for _ in range(100):
        spec = rng.choice(pool)
        q = spec.q
        L = rng.randrange(1, q + 1)
        tables = precompute_tables(spec)
        eps = 1e-9
        dual = complex(dual_char_sum(spec, tables, L, eps))
        block = complex(char_sum(spec, tables, L, eps))
        exact = direct_real_char_sum(spec, tables, L)
        e1, e2 = abs(dual - exact), abs(block - exact)
        if max(e1, e2) > eps:
            report(9, False, "q=%d L=%d dual err %g block err %g" % (q, L, e1, e2))
        worst = max(worst, e1, e2)
    # crossover demonstration at q = 10^6 + 3
    q = 10**6 + 3
    spec = legendre_spec(q)
    tables = precompute_tables(spec)
    L = 600000
    t0 = time.perf_counter()
    dual = complex(dual_char_sum(spec, tables, L, 1e-6))
    t_dual = time.perf_counter() - t0
    ops = dual_stats["correction_terms"] + dual_stats["dual_terms"]
    t0 = time.perf_counter()
    exact = direct_real_char_sum(spec, tables, L)
    t_direct = time.perf_counter() - t0
    ok = (
        abs(dual - exact) <= 1e-6
        and ops <= math.sqrt(q) * math.log(q) ** 3
        and t_dual < t_direct
    )
    report(
        9,
        ok,
        "100 three-way agreements (worst %.3g); crossover err %.2e, %d ops, %.2fs vs %.2fs direct"
        % (worst, abs(dual - exact), ops, t_dual, t_direct),
    )
