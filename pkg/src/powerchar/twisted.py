"""Character sums and quadratic-twisted character sums to power-full moduli.

The key structural fact: with C = prod p^ceil(a/3) over the prime powers in
q, a character mod q restricted to the progression l + C*Z is chi(l) times a
quadratic exponential with exact rational phase (postnikov module).  A sum of
length K therefore splits into at most C quadratic exponential sums of length
~K/C, each handled by theta_fast in polylog time, for ~q^(1/3) total cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, gcd, log2

import gmpy2
from gmpy2 import mpc, mpfr

from .character import CharValue, eval_char
from .numerics import (
    PhaseMod1,
    choose_precision,
    e_phase_mpfr,
    mod1,
    to_mpfr,
    working_precision,
)
from .postnikov import postnikov_data, progression_phase
from .theta import J_MAX, _Phase, theta_poly

DIRECT_FACTOR = 4  # fall back to direct summation when K <= DIRECT_FACTOR * C


@dataclass(frozen=True)
class Block:
    """One coprime residue class l + C*Z of a BlockDecomposition."""

    l: int
    K_l: int  # ceil((K - l) / C), number of terms in the class
    lbar: int  # (l + v)^(-1) mod q
    alpha2: PhaseMod1  # chi(l+v+C*k) = chi(l+v) e(alpha2 k + beta2 k^2)
    beta2: PhaseMod1
    chi: CharValue  # chi(l + v)


@dataclass(frozen=True)
class BlockDecomposition:
    q: int
    C: int
    K: int
    v: int
    blocks: tuple

    @property
    def residues(self):
        return [b.l for b in self.blocks]


def progression_modulus(spec):
    """C = prod p^ceil(a/3): the common difference of the decomposition."""
    C = 1
    for comp in spec.components:
        C *= comp.p ** (-(-comp.a // 3))
    return C


def block_decomposition(spec, tables, K, v=0):
    """Split sum_{0<=k<K} chi(v+k)(...) into classes k = l + C m, l in [0, C).

    Only classes with gcd(l+v, q) = 1 are kept; the others contribute nothing
    because every prime of q divides C, so non-coprimality persists along the
    whole progression.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    q = spec.q
    C = progression_modulus(spec)
    pdata = [postnikov_data(spec, tables, comp) for comp in spec.components]
    blocks = []
    for l in range(min(C, K)):
        if gcd(l + v, q) != 1:
            continue
        K_l = -(-(K - l) // C)
        lbar = pow((l + v) % q, -1, q)
        a2 = PhaseMod1(0)
        b2 = PhaseMod1(0)
        for comp, pd in zip(spec.components, pdata):
            pb = comp.p**pd.b
            m = (lbar * (C // pb)) % (comp.modulus // pb)
            al, be = progression_phase(pd, m)
            a2 += al
            b2 += be
        blocks.append(
            Block(l, K_l, lbar, a2, b2, eval_char(spec, tables, (l + v) % q))
        )
    return BlockDecomposition(q=q, C=C, K=K, v=v, blocks=tuple(blocks))


def _char_value_mpc(chi):
    if chi.is_zero:
        return mpc(0)
    return e_phase_mpfr(to_mpfr(chi.phase().r))


def _direct_twisted(spec, tables, K, v, j, a, b):
    """Plain summation; used below the C-threshold and as the K<=4C branch."""
    q = spec.q
    Kj = mpfr(K) ** j
    total = mpc(0)
    for k in range(K):
        chi = eval_char(spec, tables, (v + k) % q)
        if chi.is_zero:
            continue
        ph = to_mpfr(chi.phase().r) + a.at(k) + b.at(k, square=True)
        term = e_phase_mpfr(gmpy2.fmod(ph, 1))
        if j:
            term *= mpfr(k) ** j / Kj
        total += term
    return total


def char_sum(spec, tables, K, eps):
    """sum_{0<=k<K} chi(k) to within +-eps."""
    if K < 1:
        raise ValueError("K must be >= 1")
    eps = float(eps)
    q = spec.q
    # chi has period q; a full period sums to phi(q) (principal) or 0
    periods, K = divmod(K, q)
    base = periods * spec.phi if (periods and spec.is_principal) else 0
    if K == 0:
        return mpc(base)
    C = progression_modulus(spec)
    bits = choose_precision(eps / 4, op_count_bound=8 * C + 8, magnitude_bound=K + 1)
    with working_precision(bits):
        if K <= DIRECT_FACTOR * C:
            zero = _Phase.of(0)
            return mpc(base) + _direct_twisted(spec, tables, K, 0, 0, zero, zero)
        dec = block_decomposition(spec, tables, K, 0)
        total = mpc(base)
        for blk in dec.blocks:
            th = theta_poly(
                blk.K_l,
                [Fraction(1)],
                max(blk.K_l, 1),
                blk.alpha2.r,
                blk.beta2.r,
                eps / (2 * C),
            )
            total += _char_value_mpc(blk.chi) * th
        return mpc(total)


def twisted_theta(spec, tables, K, v, j, alpha, beta, eps):
    """K^(-j) sum_{0<=k<K} k^j chi(v+k) e(alpha k + beta k^2) to within +-eps.

    Each residue class contributes one polynomial-weight quadratic sum: the
    weight ((l + C k)/K)^j is expanded in k with exact big-integer
    coefficients, so the class needs a single theta_poly call (budget
    eps/(4C), which is the per-class total of the eps/(4C(j+1)) split across
    the j+1 monomials).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 <= j <= J_MAX:
        raise ValueError("j out of range [0, %d]" % J_MAX)
    eps = float(eps)
    q = spec.q
    C = progression_modulus(spec)
    bits = choose_precision(
        eps / 4, op_count_bound=8 * C * (j + 1) + 8, magnitude_bound=K + 1
    )
    with working_precision(bits):
        a = _Phase.of(alpha)
        b = _Phase.of(beta)
        if K <= DIRECT_FACTOR * C:
            return mpc(_direct_twisted(spec, tables, K, v, j, a, b))
        dec = block_decomposition(spec, tables, K, v)
        Kj = K**j
        C2 = C * C
        total = mpc(0)
        for blk in dec.blocks:
            l, K_l = blk.l, blk.K_l
            # ((l + C k)/K)^j = sum_r d_r (k/K_l)^r, exactly
            coeffs = [
                Fraction(comb(j, r) * l ** (j - r) * C**r * K_l**r, Kj)
                for r in range(j + 1)
            ]
            # phase of the class: chi(v+l+Ck) e(alpha(l+Ck) + beta(l+Ck)^2)
            a_fr = mod1((a.fr + 2 * l * b.fr) * C + blk.alpha2.r)
            a_fl = (a.fl + 2 * l * b.fl) * C
            b_fr = mod1(b.fr * C2 + blk.beta2.r)
            b_fl = b.fl * C2
            th = theta_poly(
                K_l, coeffs, max(K_l, 1), (a_fr, a_fl), (b_fr, b_fl), eps / (4 * C)
            )
            out_fr = mod1(a.fr * l + b.fr * (l * l))
            if not blk.chi.is_zero:
                out_fr = mod1(out_fr + blk.chi.phase().r)
            out_fl = gmpy2.fmod(a.fl * l + b.fl * (l * l), 1)
            total += e_phase_mpfr(gmpy2.fmod(to_mpfr(out_fr) + out_fl, 1)) * th
        return mpc(total)


def twisted_theta_poly(spec, tables, K, v, weights, alpha, beta, eps):
    """sum_{0<=k<K} P(k/K) chi(v+k) e(alpha k + beta k^2), P(x) = sum w_j x^j.

    Like twisted_theta but with an arbitrary polynomial weight (complex
    coefficients), so a caller expanding a smooth weight to degree J pays for
    one quadratic sum per residue class rather than J + 1.  The weight is
    re-centred per class, P((l + C k)/K) = sum_r c_r (k/K_l)^r, in working
    precision (the guard bits of the surrounding context cover the shift).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(weights) - 1 > J_MAX:
        raise ValueError("weight degree out of range [0, %d]" % J_MAX)
    eps = float(eps)
    q = spec.q
    C = progression_modulus(spec)
    J = len(weights) - 1
    # class partial sums reach ~K max|w| and only cancel across classes, so
    # the re-centering and assembly need bits for that magnitude even when the
    # caller's context is sized for an O(1) result
    bits = int(ceil(2.2 * log2(K + 4) + 1.15 * log2(1.0 / eps))) + 96
    with working_precision(max(bits, gmpy2.get_context().precision)):
        a = _Phase.of(alpha)
        b = _Phase.of(beta)
        ws = [w if isinstance(w, mpc) else mpc(to_mpfr(w)) for w in weights]
        if K <= DIRECT_FACTOR * C or K <= 4 * (J + 1):
            Kf = mpfr(K)
            total = mpc(0)
            for k in range(K):
                chi = eval_char(spec, tables, (v + k) % q)
                if chi.is_zero:
                    continue
                x = mpfr(k) / Kf
                p = mpc(0)
                for w in reversed(ws):
                    p = p * x + w
                ph = to_mpfr(chi.phase().r) + a.at(k) + b.at(k, square=True)
                total += p * e_phase_mpfr(gmpy2.fmod(ph, 1))
            return mpc(total)
        dec = block_decomposition(spec, tables, K, v)
        Kf = mpfr(K)
        C2 = C * C
        total = mpc(0)
        for blk in dec.blocks:
            l, K_l = blk.l, blk.K_l
            x0 = mpfr(l) / Kf
            c = mpfr(C) * K_l / Kf
            x0p = [mpfr(1)]
            for _ in range(J):
                x0p.append(x0p[-1] * x0)
            cr = mpc(1)
            coeffs = []
            for r in range(J + 1):
                acc = mpc(0)
                for j in range(r, J + 1):
                    acc += ws[j] * comb(j, r) * x0p[j - r]
                coeffs.append(acc * cr)
                cr *= c
            a_fr = mod1((a.fr + 2 * l * b.fr) * C + blk.alpha2.r)
            a_fl = (a.fl + 2 * l * b.fl) * C
            b_fr = mod1(b.fr * C2 + blk.beta2.r)
            b_fl = b.fl * C2
            th = theta_poly(
                K_l, coeffs, max(K_l, 1), (a_fr, a_fl), (b_fr, b_fl),
                eps / (2 * C),
            )
            out_fr = mod1(a.fr * l + b.fr * (l * l) + blk.chi.phase().r)
            out_fl = gmpy2.fmod(a.fl * l + b.fl * (l * l), 1)
            total += e_phase_mpfr(gmpy2.fmod(to_mpfr(out_fr) + out_fl, 1)) * th
        return mpc(total)


def gauss_sum(spec, tables, eps):
    """tau(chi) = sum_{1<=n<=q} chi(n) e(n/q) to within +-eps."""
    q = spec.q
    return twisted_theta(spec, tables, q, 0, 0, Fraction(1, q), 0, eps)
