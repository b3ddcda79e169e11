"""Quadratic exponential sums F(K, j, a, b) = K^-j sum k^j e(a k + b k^2).

theta_brute sums directly (the oracle); theta_fast runs the reciprocity
recursion: after normalizing the quadratic phase into [0, 1/4], the sum is
rewritten by Poisson summation as a closed main factor times a sum of the
same shape whose length shrinks to about 2*beta*K, plus boundary corrections
(Fresnel integrals near the two stationary-phase edges, closed-form inverse
power sums deeper in) and integration-by-parts tails.  Total depth is
O(log K); every truncation is budgeted against the requested eps.

Phases are carried as an exact rational part plus a high-precision float
residual, so exactly-rational inputs (the character-sum path) keep their
structure: a rational quadratic phase with small denominator w is dispatched
to a residue-split path costing w linear sums instead of a full recursion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb, ceil, log, log2

import gmpy2
from gmpy2 import mpc, mpfr

from .numerics import PhaseMod1, e_phase_mpfr, to_mpfr, working_precision
from . import sumtools
from .sumtools import (
    fresnel_e,
    linear_moment_sums,
    range_power_sum,
    two_sided_tail_inverse_power_sums,
)

log_ = logging.getLogger(__name__)

K_DIRECT = 64  # K0: direct-summation cutoff
J_MAX = 64
W_CAP = 64  # largest exact denominator for the residue-split shortcut
BRUTE_GUARD = 10**8

# running tally of "levels" and brute terms, for the CLI's op_count field
stats = {"levels": 0, "direct_terms": 0, "brute_terms": 0, "fallbacks": 0}


@dataclass
class ThetaQuery:
    K: int
    j: int
    alpha: object  # real / Fraction / PhaseMod1
    beta: object
    eps: float

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0 <= self.j <= J_MAX:
            raise ValueError("j out of range [0, %d]" % J_MAX)
        if not 0 < self.eps < 0.3678794411714423:
            raise ValueError("eps must lie in (0, e^-1)")

    @property
    def nu(self):
        return (self.j + 1) * log(self.K / self.eps)


# ---------------------------------------------------------------------------
# phase splitting


class _Phase:
    """Exact rational part plus mpfr residual, kept reduced into [0, 1)."""

    __slots__ = ("fr", "fl")

    def __init__(self, fr, fl):
        fl = mpfr(fl)
        if fl:
            fl -= gmpy2.floor(fl)
            if fl > 0.5:  # keep the float residual small in magnitude
                fl -= 1
                fr += 1
        fr -= fr.numerator // fr.denominator
        v = to_mpfr(fr) + fl
        if v >= 1:
            fr -= 1
        elif v < 0:
            fr += 1
        self.fr, self.fl = fr, fl

    @classmethod
    def of(cls, x):
        if isinstance(x, _Phase):
            return x
        if isinstance(x, PhaseMod1):
            return cls(x.r, mpfr(0))
        if isinstance(x, Fraction):
            return cls(x, mpfr(0))
        if isinstance(x, int):
            return cls(Fraction(0), mpfr(0))
        if isinstance(x, tuple):
            return cls(Fraction(x[0]), mpfr(x[1]))
        return cls(Fraction(0), mpfr(x))

    def value(self):
        v = to_mpfr(self.fr) + self.fl
        return v - gmpy2.floor(v)

    def small(self):
        """Signed representative of the phase in (-1/2, 1/2]."""
        v = to_mpfr(self.fr) + self.fl
        v -= gmpy2.floor(v)
        return v - 1 if v > 0.5 else v

    def neg(self):
        return _Phase(-self.fr, -self.fl)

    def plus_half(self):
        return _Phase(self.fr + Fraction(1, 2), self.fl)

    def one_minus(self):
        return _Phase(1 - self.fr, -self.fl)

    def at(self, k, square=False):
        """phase * k (or * k^2) mod 1, as an mpfr."""
        n = k * k if square else k
        fr = self.fr * n
        fr -= fr.numerator // fr.denominator
        fl = gmpy2.fmod(self.fl * n, 1)
        return to_mpfr(fr) + fl


def _e(x):
    return e_phase_mpfr(gmpy2.fmod(mpfr(x), 1))


# ---------------------------------------------------------------------------
# brute force


def theta_brute(K, j, alpha, beta, bits=64):
    """Direct summation of F(K, j, alpha, beta) at the given precision."""
    if K > BRUTE_GUARD:
        raise ValueError("brute force refused for K > %d" % BRUTE_GUARD)
    if K >= 3 * 10**5 and bits <= 53 and j <= J_MAX:
        return _brute_numpy(K, j, alpha, beta)
    a, b = _Phase.of(alpha), _Phase.of(beta)
    work = bits + max(8, 2 * int(log2(K + 1))) + 8
    stats["brute_terms"] += K
    with working_precision(work):
        total = mpc(0)
        Kj = mpfr(K) ** j
        for k in range(K):
            ph = a.at(k) + b.at(k, square=True)
            term = _e(ph)
            if j:
                term *= mpfr(k) ** j / Kj
            total += term
        return mpc(total)


def _brute_numpy(K, j, alpha, beta):
    import numpy as np

    def split2(x):
        v = _Phase.of(x).value()
        hi = float(v)
        return hi, float(v - mpfr(hi))

    a_hi, a_lo = split2(alpha)
    b_hi, b_lo = split2(beta)

    def two_prod(a, b):
        # Dekker/Veltkamp split product (no fma dependence)
        p = a * b
        SPLIT = 134217729.0  # 2^27 + 1
        a1 = a * SPLIT
        ah = a1 - (a1 - a)
        al = a - ah
        b1 = b * SPLIT
        bh = b1 - (b1 - b)
        bl = b - bh
        err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
        return p, err

    def two_sum(a, b):
        s = a + b
        bb = s - a
        err = (a - (s - bb)) + (b - bb)
        return s, err

    total = 0.0 + 0.0j
    Kf = float(K)
    chunk = 1 << 20
    for start in range(0, K, chunk):
        k = np.arange(start, min(start + chunk, K), dtype=np.float64)
        # a*k in double-double
        p1, e1 = two_prod(a_hi, k)
        e1 += a_lo * k
        # k^2 as dd, then b*k^2
        q1, qe = two_prod(k, k)
        p2, e2 = two_prod(b_hi, q1)
        e2 += b_hi * qe + b_lo * q1
        hi, lo = two_sum(p1, p2)
        lo += e1 + e2
        # reduce hi mod 1 (exactly: hi - round(hi) is representable)
        hi = hi - np.round(hi)
        ph, pl = two_sum(hi, lo)
        ph += pl
        vals = np.exp((2j * np.pi) * ph)
        if j:
            vals *= (k / Kf) ** j
        total += vals.sum()
    stats["brute_terms"] += K
    return mpc(total.real, total.imag)


# ---------------------------------------------------------------------------
# fast path


def theta_fast(K, j, alpha, beta, eps, bits=None):
    """F(K, j, alpha, beta) to within ~eps; poly-log runtime in K."""
    q = ThetaQuery(K, j, alpha, beta, float(eps))
    levels = max(1, int(log2(max(K, 2))) - 4)
    if bits is None:
        bits = int(
            ceil(2.2 * log2(K + 4) + 1.15 * log2(1.0 / q.eps)) + 4 * levels + 120
        )
    coeffs = [mpc(0)] * j + [mpc(1)]
    with working_precision(bits):
        a, b = _Phase.of(alpha), _Phase.of(beta)
        val = _theta_rec(K, coeffs, max(K, 1), a, b, mpfr(q.eps) / 2, 0)
        return mpc(val)


def theta_poly(K, coeffs, bhat, alpha, beta, eps, bits=None):
    """sum_{0<=k<K} P(k/bhat) e(alpha k + beta k^2) for P given by coeffs.

    Entry point for callers that fold several monomial weights into one pass
    (arithmetic-progression decompositions).  Requires bhat >= max(K - 1, 1).
    """
    if K < 1:
        return mpc(0)
    if bhat < max(K - 1, 1):
        raise ValueError("bhat must be >= K - 1")
    eps = float(eps)
    if not 0 < eps < 0.3678794411714423:
        raise ValueError("eps must lie in (0, e^-1)")
    levels = max(1, int(log2(max(K, 2))) - 4)
    if bits is None:
        bits = int(ceil(2.2 * log2(K + 4) + 1.15 * log2(1.0 / eps))) + 4 * levels + 120
    with working_precision(bits):
        cs = [c if isinstance(c, mpc) else mpc(to_mpfr(c)) for c in coeffs]
        a, b = _Phase.of(alpha), _Phase.of(beta)
        return mpc(_theta_rec(K, cs, bhat, a, b, mpfr(eps), 0))


def _theta_rec(K, coeffs, bhat, alpha, beta, eps, depth):
    """sum_{0<=k<K} P(k/bhat) e(alpha k + beta k^2), |error| <= ~eps.

    Invariant: bhat >= K - 1, so the weight argument stays in [0, 1].
    """
    if K <= 0:
        return mpc(0)
    # scale-normalize the weight so eps talks to O(1) coefficients
    scale = max((abs(c) for c in coeffs if c), default=mpfr(0))
    if not scale:
        return mpc(0)
    coeffs = [c / scale for c in coeffs]
    eps = eps / scale
    return scale * _theta_core(K, coeffs, bhat, alpha, beta, eps, depth)


def _theta_core(K, coeffs, bhat, alpha, beta, eps, depth):
    D = len(coeffs) - 1
    if depth > 80:
        return _fallback(K, coeffs, bhat, alpha, beta, "depth overflow")
    tol2 = _tol_log2(eps)
    Lnats = max(10.0, -log(float(eps) / 8 + 1e-300)) + log(D + 1.0)
    delta = int(ceil(0.45 * Lnats)) + 6

    if K <= max(K_DIRECT, 2 * D + 16, 6 * delta):
        return _direct(K, coeffs, bhat, alpha, beta)

    # --- normalize beta into [0, 1/4] -------------------------------------
    bv = beta.value()
    if bv > 0.5:
        val = _theta_rec(
            K, [c.conjugate() for c in coeffs], bhat, alpha.neg(), beta.one_minus(),
            eps, depth,
        )
        return val.conjugate()
    if bv > 0.25:
        # e(beta k^2) = e((beta - 1/2) k^2) e(k/2); then flip the sign
        a2 = alpha.plus_half().neg()
        b2 = beta.plus_half().one_minus()  # = 1/2 - beta in [0, 1/4)
        val = _theta_rec(K, [c.conjugate() for c in coeffs], bhat, a2, b2, eps, depth)
        return val.conjugate()

    B = K - 1
    two_pi = 2 * gmpy2.const_pi()
    theta_abs = max(sumtools.THETA_ABS, 2.0 * D)

    # --- tiny quadratic phase: absorb into the weight ----------------------
    if two_pi * bv * B * B <= theta_abs:
        c2 = _absorb_quadratic(coeffs, bhat, beta, B, tol2)
        gamma = alpha.value()
        return sumtools.linear_sum(c2, bhat, K, gamma, tol2)

    # --- exact small-denominator quadratic phase ---------------------------
    w = beta.fr.denominator
    if (
        (w <= W_CAP or w * w <= 4 * K)
        and two_pi * abs(beta.fl) * B * B <= sumtools.THETA_ABS
    ):
        return _rational_split(K, coeffs, bhat, alpha, beta, tol2)

    # --- general Poisson level ---------------------------------------------
    try:
        return _poisson_level(K, coeffs, bhat, alpha, beta, eps, depth, Lnats, delta)
    except ArithmeticError as exc:
        return _fallback(K, coeffs, bhat, alpha, beta, str(exc))


def _tol_log2(eps):
    return min(-8, int(gmpy2.floor(gmpy2.log2(mpfr(eps)))) - 6)


def _direct(K, coeffs, bhat, alpha, beta):
    stats["direct_terms"] += K
    total = mpc(0)
    bh = mpfr(bhat)
    for k in range(K):
        ph = alpha.at(k) + beta.at(k, square=True)
        x = mpfr(k) / bh
        p = mpc(0)
        for c in reversed(coeffs):
            p = p * x + c
        total += p * _e(ph)
    return total


def _fallback(K, coeffs, bhat, alpha, beta, why):
    stats["fallbacks"] += 1
    log_.warning("theta fast path fell back to brute force (%s), K=%d", why, K)
    if K > BRUTE_GUARD:
        raise ArithmeticError("fallback needed but K over brute guard: " + why)
    return _direct(K, coeffs, bhat, alpha, beta)


def _absorb_quadratic(coeffs, bhat, beta, B, tol2):
    """Fold e(beta k^2) into the polynomial weight (2 pi beta B^2 small).

    e(beta k^2) = sum_t (2 pi i beta bhat^2)^t / t! * (k/bhat)^(2t); the max
    series term is ~e^{2 pi beta B^2}, hence the guard bits.
    """
    ctx = gmpy2.get_context()
    old = ctx.precision
    gmpy2.set_context(gmpy2.context(precision=old + int(1.5 * sumtools.THETA_ABS) + 3 * len(coeffs) + 16))
    try:
        w = mpc(0, 2 * gmpy2.const_pi()) * beta.small()
        tol = mpfr(2) ** (tol2 - 8)
        out = [mpc(c) for c in coeffs]
        bh2 = mpfr(bhat) * bhat
        x2 = mpfr(B) * B / bh2  # (B/bhat)^2 <= 1, tracks the term bound
        fac = mpc(1)  # (w bhat^2)^t / t!
        bound = mpfr(1)
        t = 0
        while True:
            t += 1
            fac *= w * bh2 / t
            bound = abs(fac) * x2**t
            for d, cd in enumerate(coeffs):
                if cd:
                    idx = d + 2 * t
                    while len(out) <= idx:
                        out.append(mpc(0))
                    out[idx] += cd * fac
            if bound < tol:
                break
            if t > 600:
                raise ArithmeticError("quadratic absorb failed to converge")
        return out
    finally:
        gmpy2.set_context(gmpy2.context(precision=old))


def _rational_split(K, coeffs, bhat, alpha, beta, tol2):
    """beta = u/w exactly (plus a tiny absorbed float): split k mod w.

    k = t + w m kills every quadratic cross term (b w^2 and 2 b t w are
    integers), so each residue class is a pure linear-phase moment sum.  The
    t-loop only accumulates phase-weighted power sums S[p] = sum_t e(theta_t)
    (t/bhat)^p per class-length group; the O(D^2) binomial recombination then
    happens once per group instead of once per residue.
    """
    ctx_bits = gmpy2.get_context().precision
    bits = min(ctx_bits, int(-tol2) + int(1.2 * log2(K + 2)) + 176)
    with working_precision(bits):
        if abs(beta.fl) > 0:
            coeffs = _absorb_quadratic(
                coeffs, bhat, _Phase(Fraction(0), beta.fl), K - 1, tol2
            )
            beta = _Phase(beta.fr, 0.0)  # the float part now lives in coeffs
        D = len(coeffs) - 1
        w = beta.fr.denominator
        gamma_w = alpha.at(w)  # alpha * w mod 1
        bh = mpfr(bhat)
        T = min(w, K)
        # class lengths ceil((K - t)/w) take at most two values, split at
        # t = K mod w: length n_full + 1 below the split, n_full at or above
        n_full, t_split = divmod(K, w)
        lengths = set()
        if t_split > 0:
            lengths.add(n_full + 1)
        if T > t_split:
            lengths.add(n_full)
        V = {M: linear_moment_sums(gamma_w, M, D, tol2) for M in lengths}
        S = {M: [mpc(0)] * (D + 1) for M in lengths}
        # e(alpha t + beta t^2) by first differences: three complex mults per
        # t beat a sin_cos plus exact-rational reductions (drift is ~w ulps)
        E = mpc(1)
        U = _e(alpha.value() + beta.value())
        Ustep = _e(2 * beta.value())
        if D == 0:
            split = min(t_split, T)
            s_hi = mpc(0)
            for _ in range(split):
                s_hi += E
                E, U = E * U, U * Ustep
            s_lo = mpc(0)
            for _ in range(T - split):
                s_lo += E
                E, U = E * U, U * Ustep
            if t_split > 0:
                S[n_full + 1][0] = s_hi
            if T > t_split:
                S[n_full][0] = s_lo
        else:
            for t in range(T):
                Et, E, U = E, E * U, U * Ustep
                St = S[n_full + 1] if t < t_split else S[n_full]
                tb = mpfr(t) / bh
                tp = Et
                for p in range(D + 1):
                    St[p] += tp
                    tp *= tb
        total = mpc(0)
        wb = mpfr(w) / bh
        for M, Sg in S.items():
            VM = V[M]
            wbi = mpfr(1)
            for i in range(D + 1):
                gi = mpc(0)
                for d in range(i, D + 1):
                    if coeffs[d]:
                        gi += coeffs[d] * comb(d, i) * Sg[d - i]
                total += gi * wbi * VM[i]
                wbi *= wb
        return mpc(total)


# ---------------------------------------------------------------------------
# the Poisson / stationary-phase level


def _poisson_level(K, coeffs, bhat, alpha, beta, eps, depth, Lnats, delta):
    stats["levels"] += 1
    D = len(coeffs) - 1
    B = K - 1
    av = alpha.value()
    bv = beta.value()
    pi = gmpy2.const_pi()
    two_pi_i = mpc(0, 2 * pi)
    bh = mpfr(bhat)

    c0 = av
    c1 = av + 2 * bv * B
    m_lo = int(gmpy2.ceil(c0)) - delta
    m_hi = int(gmpy2.floor(c1)) + delta
    Kp = m_hi - m_lo + 1
    if Kp >= K:
        return _fallback(K, coeffs, bhat, alpha, beta, "no shrink")

    eps_child = eps / 4
    eps_corr = eps / 4
    eps_tail = eps / 4
    tol_corr = _tol_log2(eps_corr)

    # endpoint phases and half-terms
    phiB = gmpy2.fmod(alpha.at(B) + beta.at(B, square=True), 1)
    eB = _e(phiB)
    P0 = coeffs[0]
    PB = mpc(0)
    xB = mpfr(B) / bh
    for c in reversed(coeffs):
        PB = PB * xB + c
    total = (P0 + PB * eB) / 2

    # Gaussian moments M_i (odd vanish)
    Ms = _gauss_moments(D, bv)

    # W_M(c) = sum_e A_e c^e  (the even-moment main-term polynomial)
    A = [mpc(0)] * (D + 1)
    bpow = [mpfr(bhat) ** (-d) for d in range(D + 1)]
    for e_ in range(D + 1):
        acc = mpc(0)
        for d in range(e_, D + 1, 2):
            if coeffs[d]:
                acc += coeffs[d] * bpow[d] * comb(d, d - e_) * Ms[d - e_]
        A[e_] = acc

    # --- recursive main sum ------------------------------------------------
    dlt = mpfr(m_lo) - av  # delta offset of the new sum
    inv2b = 1 / (2 * bv)
    theta0 = -(dlt * dlt) * inv2b / 2  # -delta^2/(4 beta)
    alpha_p = -dlt * inv2b
    beta_p = -inv2b / 2  # -1/(4 beta)
    bhat_p = max(Kp - 1, 1)
    chat = [mpc(0)] * (D + 1)
    for t in range(D + 1):
        acc = mpc(0)
        for e_ in range(t, D + 1):
            if A[e_]:
                acc += A[e_] * comb(e_, t) * dlt ** (e_ - t) * inv2b**e_
        chat[t] = acc * mpfr(bhat_p) ** t
    child = _theta_rec(
        Kp, chat, bhat_p,
        _Phase(Fraction(0), gmpy2.fmod(alpha_p, 1)),
        _Phase(Fraction(0), gmpy2.fmod(beta_p, 1)),
        eps_child, depth + 1,
    )
    total += _e(theta0) * child

    # --- corrections around the two stationary edges -----------------------
    # asymptotic series for G_i(a) ~ e^{2 pi i beta a^2} sum_t g_{i,t} a^{i-1-2t}
    Cmax = max(abs((mpfr(m_lo) - av) * inv2b), abs((mpfr(m_hi) - av) * inv2b))
    rho = max(Cmax, bh) / bh
    a_min_dist, t_max, T_edge = _series_plan(bv, D, Lnats, tol_corr, rho, Kp)

    def theta_m(m):
        u = mpfr(m) - av
        return -(u * u) * inv2b / 2

    def cm_of(m):
        return (mpfr(m) - av) * inv2b

    # edge-exact windows
    wL_a = max(m_lo, int(gmpy2.ceil(c0 - T_edge)))
    wL_b = min(m_hi, int(gmpy2.floor(c0 + T_edge)))
    wR_a = max(m_lo, int(gmpy2.ceil(c1 - T_edge)))
    wR_b = min(m_hi, int(gmpy2.floor(c1 + T_edge)))

    # how much a G_0 error can be blown up by the window assembly below
    cmax = mpfr(1)
    for mm in (wL_a, wL_b, wR_a, wR_b):
        cmax = max(cmax, abs(cm_of(mm)))
    inv2w_abs = 1 / (4 * pi * bv)
    amp = mpfr(0)
    dfac = [mpfr(1)] * (D + 2)
    for l in range(2, D + 2):
        dfac[l] = dfac[l - 2] * (l - 1)  # (l-1)!! for even l
    for d in range(D + 1):
        if not coeffs[d]:
            continue
        for i in range(0, d + 1, 2):
            amp += (
                abs(coeffs[d]) * bpow[d] * comb(d, i)
                * cmax ** (d - i) * dfac[i] * inv2w_abs ** (i // 2)
            )
    amp_log2 = max(0, int(gmpy2.ceil(gmpy2.log2(max(amp, mpfr(1))))))

    def exact_G(a):
        return _exact_G_vector(a, D, bv, tol_corr, amp_log2)

    for m in range(wL_a, wL_b + 1):
        cm = cm_of(m)
        Gs = exact_G(cm)
        s = mpc(0)
        for d in range(D + 1):
            if not coeffs[d]:
                continue
            inner = mpc(0)
            for i in range(d + 1):
                term = comb(d, i) * cm ** (d - i) * Gs[i]
                inner += -term if i % 2 else term
            s += coeffs[d] * bpow[d] * inner
        total -= _e(theta_m(m)) * s
    for m in range(wR_a, wR_b + 1):
        cm = cm_of(m)
        Gs = exact_G(mpfr(B) - cm)
        s = mpc(0)
        for d in range(D + 1):
            if not coeffs[d]:
                continue
            inner = mpc(0)
            for i in range(d + 1):
                inner += comb(d, i) * cm ** (d - i) * Gs[i]
            s += coeffs[d] * bpow[d] * inner
        total -= _e(theta_m(m)) * s

    # deep closed forms.  The alternating sums sum_i C(c,i)(-1)^i g_{i,t}
    # vanish identically for t < c (g_{i,t} is a degree-t polynomial in i),
    # so after collapsing only genuinely negative inverse powers of c_m
    # survive -- evaluating the raw double sum instead loses all precision
    # to cancellation when beta is small.
    alt = _alt_table(D, t_max)
    inv2w = mpc(0, -1) / (4 * pi * bv)  # 1/(2w), w = 2 pi i beta
    gfac = [mpc(1)]
    for _ in range(t_max + 1):
        gfac.append(gfac[-1] * -inv2w)
    gfac = gfac[1:]  # gfac[t] = (-1/(2w))^(t+1)

    # left-edge series over [m_lo, m_hi] minus the window
    rangesL = [(m_lo, wL_a - 1), (wL_b + 1, m_hi)]
    SL = _power_sums_about(av, rangesL, -1, 2 * t_max + 1, tol_corr)
    corr = mpc(0)
    for d in range(D + 1):
        if not coeffs[d]:
            continue
        for t in range(d, t_max + 1):
            if not alt[d][t]:
                continue
            pw = d - 1 - 2 * t
            corr += (
                coeffs[d] * bpow[d] * alt[d][t] * gfac[t]
                * mpfr(2 * bv) ** (-pw) * SL[pw]
            )
    total -= corr

    # right-edge series, expanded about c1: c_m = B - aR
    rangesR = [(m_lo, wR_a - 1), (wR_b + 1, m_hi)]
    SRraw = _power_sums_about(c1, rangesR, -1, 2 * t_max + 1, tol_corr)
    SR = {pw: (SRraw[pw] if pw % 2 == 0 else -SRraw[pw]) for pw in SRraw}
    corr = mpc(0)
    Bf = mpfr(B)
    for d in range(D + 1):
        if not coeffs[d]:
            continue
        for t in range(t_max + 1):
            for c_ in range(min(d, t) + 1):
                if not alt[c_][t]:
                    continue
                pw = c_ - 1 - 2 * t
                corr += (
                    coeffs[d] * bpow[d] * comb(d, c_) * Bf ** (d - c_)
                    * (-1 if c_ % 2 else 1) * alt[c_][t] * gfac[t]
                    * mpfr(2 * bv) ** (-pw) * SR[pw]
                )
    total -= eB * corr

    # strip compensations: deep-left of c0 / deep-right of c1 pick up the
    # full Gaussian moment that the recursive main sum wrongly included
    for m in range(m_lo, wL_a):
        cm = cm_of(m)
        wm = mpc(0)
        for e_ in range(D, -1, -1):
            wm = wm * cm + A[e_]
        total -= _e(theta_m(m)) * wm
    for m in range(wR_b + 1, m_hi + 1):
        cm = cm_of(m)
        wm = mpc(0)
        for e_ in range(D, -1, -1):
            wm = wm * cm + A[e_]
        total -= _e(theta_m(m)) * wm

    # --- integration-by-parts tails ----------------------------------------
    total += _tails(coeffs, bhat, B, av, c0, c1, bv, m_lo, m_hi, eB, eps_tail, delta)
    return total


def _gauss_moments(D, bv):
    """M_i = int u^i e^{2 pi i beta u^2} du; odd i give 0."""
    pi = gmpy2.const_pi()
    Ms = [mpc(0)] * (D + 1)
    gam = gmpy2.sqrt(pi)  # Gamma(1/2)
    for l in range(D // 2 + 1):
        ph = _e(mpfr(2 * l + 1) / 8)
        Ms[2 * l] = gam * mpfr(2 * pi * bv) ** (-(2 * l + 1) / mpfr(2)) * ph
        gam *= l + mpfr(1) / 2
    return Ms


def _alt_table(D, t_max):
    """alt[d][t] = sum_i C(d,i)(-1)^i prod_{s=1}^{t}(i+1-2s), exact integers.

    g_{i,t} = (-1/(2w))^(t+1) prod_{s<=t}(i+1-2s), so these carry the whole
    combinatorial part of the collapsed edge series; alt[d][t] = 0 for t < d.
    """
    prods = []
    for i in range(D + 1):
        row = [1]
        for t in range(1, t_max + 1):
            row.append(row[-1] * (i + 1 - 2 * t))
        prods.append(row)
    alt = []
    for d in range(D + 1):
        row = []
        for t in range(t_max + 1):
            s = sum(
                (-comb(d, i) if i % 2 else comb(d, i)) * prods[i][t]
                for i in range(d + 1)
            )
            row.append(s)
        alt.append(row)
    return alt


def _series_plan(bv, D, Lnats, tol_corr, rho, count):
    """Pick the edge window radius T and series depth t_max.

    rho bounds |c_m| / bhat over the summation range, count the number of
    m values sharing the tolerance budget.
    """
    T = max(3, int(ceil(gmpy2.sqrt(8 * bv * Lnats / gmpy2.const_pi()))) + 2)
    tol = mpfr(2) ** tol_corr / max(count, 1)
    while True:
        a_min = mpfr(max(T - 1, 1)) / (2 * bv)
        denom = 4 * gmpy2.const_pi() * bv * a_min * a_min
        # worst per-m truncated term is ~ (2 rho)^D |g_{i,t}| a_min^{-1-2t};
        # step t multiplies by max_i |i+1-2t| / (4 pi beta a_min^2)
        u = (2 * max(rho, mpfr(1))) ** D / (4 * gmpy2.const_pi() * bv * a_min)
        t = 0
        ok = False
        while t < 4 * Lnats + 16:
            t += 1
            ratio = max(2 * t - 1, D + 1 - 2 * t) / denom
            u *= ratio
            if u <= tol:
                ok = True
                break
            if ratio >= 1:
                break
        if ok:
            return a_min, t, T
        T += 2


def _exact_G_vector(a, D, bv, tol2, amp_log2=0):
    """[G_0(a) .. G_D(a)], G_i(a) = int_a^inf u^i e^{2 pi i beta u^2} du.

    amp_log2: log2 of the factor the caller multiplies these by; the G_0
    error propagates up the recursion scaled by (i-1)!! / (4 pi beta)^(i/2),
    so the Fresnel value must be that much tighter than the target.
    """
    pi = gmpy2.const_pi()
    sb = gmpy2.sqrt(mpfr(bv))
    x = 2 * sb * a
    F = fresnel_e(x, tol2 - 4 - amp_log2) / (2 * sb)
    M0 = gmpy2.exp(mpc(0, pi / 4)) / gmpy2.sqrt(2 * mpfr(bv))
    out = [M0 / 2 - F]
    if D >= 1:
        inv2w = mpc(0, -1) / (4 * pi * bv)  # 1/(2w)
        ewa2 = _e(bv * a * a)
        out.append(-ewa2 * inv2w)
        apow = mpfr(a)
        for i in range(2, D + 1):
            out.append(-apow * ewa2 * inv2w - (i - 1) * inv2w * out[i - 2])
            apow *= a
    return out


def _power_sums_about(c, ranges, pw_hi, p_lo, tol2):
    """{pw: sum (m-c)^pw} over the union of ranges, pw in [-p_lo, pw_hi]."""
    out = {}
    for pw in range(-p_lo, pw_hi + 1):
        acc = mpfr(0)
        for ma, mb in ranges:
            if ma > mb:
                continue
            acc += range_power_sum(c, pw, ma, mb, tol2)
        out[pw] = acc
    return out


def _tails(coeffs, bhat, B, av, c0, c1, bv, m_lo, m_hi, eB, eps_tail, delta):
    """sum over m < m_lo and m > m_hi of I_m, by repeated integration by parts."""
    two_pi_i = mpc(0, 2 * gmpy2.const_pi())
    tol2 = _tol_log2(eps_tail)
    bh = mpfr(bhat)
    xB = mpfr(B) / bh
    # tail inverse-power sums about both endpoints' derivative values:
    # psi'_m(0) = c0 - m, psi'_m(B) = c1 - m
    max_rounds = 4 * delta + 8
    T0 = two_sided_tail_inverse_power_sums(mpfr(c0), max_rounds + 2, m_lo, m_hi, tol2)
    T1 = two_sided_tail_inverse_power_sums(mpfr(c1), max_rounds + 2, m_lo, m_hi, tol2)

    terms = {0: list(coeffs)}  # p -> coeffs of P with weight psi'^-p
    total = mpc(0)
    dist = max(delta - 1, 2)
    for rnd in range(max_rounds):
        new = {}
        bound = mpfr(0)
        for p, cs in terms.items():
            PB = mpc(0)
            for c in reversed(cs):
                PB = PB * xB + c
            P0 = cs[0]
            total += (PB * eB * T1[p + 1] - P0 * T0[p + 1]) / two_pi_i
            # -(P/psi'^p / (2 pi i psi'))' pieces
            dcs = [cs[t] * t / bh for t in range(1, len(cs))] or [mpc(0)]
            _acc(new, p + 1, [-c / two_pi_i for c in dcs])
            _acc(new, p + 2, [c * (2 * bv) * (p + 1) / two_pi_i for c in cs])
        terms = new
        # remainder bound: sum_j ||P_j||_1 * sum_tail int |psi'|^-p
        ok = True
        for p, cs in terms.items():
            if p < 3:
                ok = False
                break
            norm = sum((abs(c) for c in cs), mpfr(0))
            bound += norm / (2 * bv) * 2 / (p - 1) * 2 * mpfr(dist) ** (2 - p) / (p - 2)
        if ok and bound <= eps_tail:
            return total
    raise ArithmeticError("tail integration by parts failed to converge")


def _acc(d, p, cs):
    cur = d.get(p)
    if cur is None:
        d[p] = list(cs)
        return
    if len(cur) < len(cs):
        cur.extend([mpc(0)] * (len(cs) - len(cur)))
    for i, c in enumerate(cs):
        cur[i] += c
