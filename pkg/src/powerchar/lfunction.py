"""Dirichlet L-values on the strip 1/2 <= Re(s) <= 1 in poly-log time.

Pipeline: truncate the Dirichlet series where partial summation (via the
Polya--Vinogradov bound) makes the tail negligible, sum an initial segment
directly, and cover the bulk by geometrically growing anchor blocks.  On the
block anchored at v, (v+k)^(-s) factors as v^(-s) e(alpha k + beta k^2)
e^(Q(k/K)) with Q a short power series, so each block reduces to a single
polynomial-weight twisted quadratic sum per residue class.

Everything reports through an explicit error ledger: truncation remainder,
exponent-series and Taylor truncations, per-block quadratic-sum budgets, and
round-off, whose total is the returned bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, comb, log

import gmpy2
from gmpy2 import mpc, mpfr

from .character import eval_char, char_parity
from .numerics import choose_precision, e_phase_mpfr, to_mpfr, working_precision
from .twisted import gauss_sum, progression_modulus, twisted_theta_poly

J_CAP = 48  # largest weight degree handed to a single quadratic sum
MIN_CONDUCTOR_PRODUCT = 1000.0  # q(|s|+1) below this, the remainder formula
# has no headroom and the truncation length is grown until it does


@dataclass(frozen=True)
class LQuery:
    """One L(s, chi) evaluation request.

    Accuracy is q^(-lam) (|s|+1)^(-lam) when `lam` is given, or the absolute
    `eps_abs` otherwise (converted to an effective lam internally).
    """

    spec: object
    s: complex
    lam: float = None
    eps_abs: float = None
    subdivision: str = "ratio"  # or "dyadic"

    def __post_init__(self):
        s = complex(self.s)
        if not 0.5 <= s.real <= 1.0:
            raise ValueError("Re(s) must lie in [1/2, 1]")
        if self.spec.is_principal:
            raise ValueError("principal character: L(s, chi0) reduces to zeta")
        if (self.lam is None) == (self.eps_abs is None):
            raise ValueError("give exactly one of lam, eps_abs")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.eps_abs is not None and not 0 < self.eps_abs < 1:
            raise ValueError("eps_abs must lie in (0, 1)")
        if self.subdivision not in ("ratio", "dyadic"):
            raise ValueError("subdivision must be 'ratio' or 'dyadic'")

    @property
    def budget(self):
        if self.eps_abs is not None:
            return float(self.eps_abs)
        base = self.spec.q * (abs(self.s) + 1.0)
        return base ** (-self.lam)

    @property
    def lam_eff(self):
        if self.lam is not None:
            return self.lam
        base = self.spec.q * (abs(self.s) + 1.0)
        return max(0.0, log(1.0 / self.eps_abs) / log(base))


@dataclass
class BlockPlan:
    M: int
    M1: int
    remainder_bound: float
    intervals: list  # [start, end) pairs partitioning [M1, M)
    anchors: list  # (v, K) pairs, v anchor, K block length


@dataclass
class TaylorBlock:
    v: int
    K: int
    tau: list  # tau[j], j = 1..J0, exponent-series coefficients in w = k/K
    z: list  # weight coefficients, e^(Q(w)) ~ sum z_j w^j
    alpha: object  # linear phase of e(alpha k + beta k^2)
    beta: object
    err_exp: float  # pointwise bound for the J0-truncation of Q
    err_trunc: float  # pointwise bound for the J-truncation of e^Q


@dataclass
class LResult:
    value: object  # mpc
    abs_error_bound: float
    ledger: dict = field(default_factory=dict)
    n_anchors: int = 0
    op_count: int = 0


def _polya_vinogradov_remainder(q, s, M):
    """Tail bound of the truncated series: 2 sqrt(q) log q (|s|+1) / (sigma M^sigma)."""
    sigma = s.real
    return float(
        2.0
        * gmpy2.sqrt(q)
        * gmpy2.log(q)
        * (abs(s) + 1.0)
        / (sigma * gmpy2.exp(sigma * gmpy2.log(mpfr(M))))
    )


def truncation_length(q, s, lam):
    """Series length M with remainder <= 0.1 q^(-lam)(|s|+1)^(-lam)."""
    s = complex(s)
    sigma = s.real
    base = mpfr(q) * (abs(s) + 1.0)
    d = (lam + 2.0) / sigma
    M = int(gmpy2.ceil(gmpy2.exp(d * gmpy2.log(base))))
    target = 0.1 * float(base**-lam) if lam else 0.1
    # q(|s|+1) >= 10^3 makes the exponent-2 headroom absorb the log factor;
    # smaller conductors just grow M until the explicit bound complies
    while _polya_vinogradov_remainder(q, s, M) > target:
        M *= 2
    return M, _polya_vinogradov_remainder(q, s, M)


def plan_blocks(query):
    """Partition [M1, M) into anchor blocks per the requested subdivision."""
    q = query.spec.q
    s = complex(query.s)
    M, rb = truncation_length(q, s, query.lam_eff)
    s13 = (abs(s) + 1.0) ** (1.0 / 3.0)
    M1 = progression_modulus(query.spec) * ceil(s13)
    intervals, anchors = [], []
    if query.subdivision == "ratio":
        v = M1
        while v < M:
            K = min(ceil(v / s13), M - v)
            anchors.append((v, K))
            intervals.append((v, v + K))
            v += K
    else:
        N = M1
        while N < M:
            end = min(2 * N, M)
            intervals.append((N, end))
            K = ceil(N / s13)
            v = N
            while v < end:
                anchors.append((v, min(K, end - v)))
                v += min(K, end - v)
            N = end
    return BlockPlan(M=M, M1=M1, remainder_bound=rb, intervals=intervals, anchors=anchors)


def _z_tail_bound(tau_abs, rho, J):
    """Cauchy bound for sum_{j>J} |z_j|: sup |e^Q| on |w|=rho times tail of rho^-j."""
    if rho <= 1.0:
        return float("inf")
    S = mpfr(0)
    rj = mpfr(rho)
    for t in tau_abs:
        S += t * rj
        rj *= rho
    return float(gmpy2.exp(S) * mpfr(rho) ** (-J) / (rho - 1.0))


def _weight_degree(s_abs, sigma, r, tol):
    """Smallest Taylor degree J meeting tol at block ratio r = K/v (or None)."""
    if r >= 0.9:
        return None  # exponent series near its convergence edge: split block
    J0 = _exponent_degree(s_abs, sigma, r, tol)[0]
    tau_abs = [abs(_tau_j(complex(s_abs, 0), sigma, r, j)) for j in range(1, J0 + 1)]
    best = None
    for i in range(1, 8):
        rho = (1.0 / r) ** (i / 8.0)
        if rho <= 1.02:
            continue
        lead = _z_tail_bound(tau_abs, rho, 0)
        if lead <= 0 or tol <= 0:
            continue
        # solve sup * rho^-J <= tol for J
        J = max(0, ceil(log(lead / tol) / log(rho))) if lead > tol else 0
        if best is None or J < best:
            best = J
    return best


def _tau_j(s, sigma, r, j):
    """Exponent-series coefficient of w^j; j=1,2 keep only the real part
    (the imaginary parts are carried exactly by the quadratic phase)."""
    if j == 1:
        return -sigma * r
    if j == 2:
        return sigma * r * r / 2.0
    return (-1) ** j * s * r**j / j


def _exponent_degree(s_abs, sigma, r, tol):
    """Smallest J0 with the dropped exponent tail below tol (pointwise)."""
    J0 = 3
    while True:
        tail = s_abs * r ** (J0 + 1) / ((J0 + 1) * (1.0 - r))
        err = 2.72 * tail  # |e^Q - e^{Q_trunc}| <= e^{|Q|}(e^tail - 1), |Q| <~ 1
        if err <= tol or J0 >= 400:
            return J0, err
        J0 += 1


def taylor_coeffs(s, K, v, tol, J0=None, J=None):
    """Expand (1 + k/v)^(-s) e(-alpha k - beta k^2) ~ sum_j z_j (k/K)^j.

    alpha, beta carry the linear/quadratic part of -Im(s) log(1+k/v) exactly;
    the rest is e^(Q(k/K)) with Q of degree J0, re-expanded to degree J.  Both
    truncations are bounded pointwise (err_exp, err_trunc <= tol each).
    """
    s = complex(s)
    sigma = s.real
    rf = float(K) / float(v)
    if J0 is None:
        J0, err_exp = _exponent_degree(abs(s), sigma, rf, tol)
    else:
        tail = abs(s) * rf ** (J0 + 1) / ((J0 + 1) * (1.0 - rf))
        err_exp = 2.72 * tail
    r = mpfr(K) / mpfr(v)
    tau = []
    for j in range(1, J0 + 1):
        if j == 1:
            tau.append(mpc(-sigma * r))
        elif j == 2:
            tau.append(mpc(sigma * r * r / 2))
        else:
            tau.append(mpc(s) * (-1) ** j * r**j / j)
    tau_abs = [abs(t) for t in tau]
    if J is None:
        best = None
        for i in range(1, 8):
            rho = (1.0 / rf) ** (i / 8.0)
            if rho <= 1.02:
                continue
            lead = _z_tail_bound(tau_abs, rho, 0)
            Ji = max(0, ceil(log(max(lead, 1e-300) / tol) / log(rho)))
            if best is None or Ji < best[0]:
                best = (Ji, rho)
        J, rho = best
        err_trunc = _z_tail_bound(tau_abs, rho, J)
    else:
        err_trunc = min(_z_tail_bound(tau_abs, (1.0 / rf) ** (i / 8.0), J) for i in range(1, 8))
    assert J <= 2 * J_CAP, "block ratio too coarse for the degree cap (plan bug)"
    # Taylor coefficients of exp(Q): j z_j = sum_m m tau_m z_{j-m}
    z = [mpc(1)]
    for j in range(1, J + 1):
        acc = mpc(0)
        for m in range(1, min(j, J0) + 1):
            acc += m * tau[m - 1] * z[j - m]
        z.append(acc / j)
    two_pi = 2 * gmpy2.const_pi()
    alpha = -mpfr(s.imag) / (two_pi * v)
    beta = mpfr(s.imag) / (2 * two_pi * mpfr(v) ** 2)
    return TaylorBlock(
        v=v, K=K, tau=tau, z=z, alpha=alpha, beta=beta,
        err_exp=float(err_exp), err_trunc=float(err_trunc),
    )


def _pow_minus_s(n, s_mpc, logn=None):
    """n^(-s) = e^(-s log n) at working precision."""
    ln = gmpy2.log(mpfr(n)) if logn is None else logn
    return gmpy2.exp(-s_mpc * ln)


def _refine_anchors(plan, s_abs, sigma, tol_pt):
    """Split plan anchors until the weight degree fits under J_CAP.

    The plan's K = ceil(v / (|s|+1)^(1/3)) keeps the exponent series decaying,
    but the decay rate may need more than J_CAP coefficients at the requested
    tolerance; shorter blocks trade block count for degree.
    """
    out = []
    for v, K in plan.anchors:
        end = v + K
        while v < end:
            Kv = min(K, end - v)
            while Kv > 1:
                J = _weight_degree(s_abs, sigma, Kv / v, tol_pt)
                if J is not None and J <= J_CAP:
                    break
                Kv = (Kv + 1) // 2
            out.append((v, Kv))
            v += Kv
    return out


def l_value(query, tables):
    """L(s, chi) to within +-budget, with a machine-checkable error ledger."""
    spec = query.spec
    q = spec.q
    s = complex(query.s)
    sigma = s.real
    eps = query.budget
    plan = plan_blocks(query)
    M, M1 = plan.M, plan.M1
    lnM = log(M)
    # |Im(s)| log v phases need absolute accuracy: pad for their magnitude
    phase_pad = max(0, ceil(log(1.0 + abs(s.imag) * lnM, 2)))
    bits = (
        choose_precision(eps / 8, op_count_bound=64 * (len(plan.anchors) + M1 + 8))
        + phase_pad
    )
    with working_precision(bits):
        s_mpc = mpc(s.real, s.imag)
        ledger = {"remainder": plan.remainder_bound}
        total = mpc(0)
        op_count = 0
        for n in range(1, min(M1, M)):
            chi = eval_char(spec, tables, n % q)
            if chi.is_zero:
                continue
            total += e_phase_mpfr(to_mpfr(chi.phase().r)) * _pow_minus_s(n, s_mpc)
            op_count += 1
        ledger["initial_roundoff"] = float(M1 * 8 * mpfr(2) ** (4 - bits))
        # weighted mass of the bulk, for the pointwise Taylor tolerance
        if plan.anchors:
            W = sum(mpfr(K) * mpfr(v) ** (-sigma) for v, K in plan.anchors)
            tol_pt = 0.1 * eps / float(W)
            anchors = _refine_anchors(plan, abs(s), sigma, tol_pt)
            n_anchors = len(anchors)
            err_taylor = mpfr(0)
            err_theta = mpfr(0)
            # roundoff in the z coefficients is amplified by ~W exactly like
            # the truncation error, so the expansion runs at a precision tied
            # to tol_pt rather than to the assembly precision
            bits_z = max(bits, ceil(-log(tol_pt, 2)) + 48)
            for v, K in anchors:
                with working_precision(bits_z):
                    tb = taylor_coeffs(s, K, v, tol_pt)
                vs = _pow_minus_s(v, s_mpc)
                eps_th = min(0.3, 0.4 * eps * float(mpfr(v) ** sigma) / n_anchors)
                val = twisted_theta_poly(
                    spec, tables, K, v, tb.z, tb.alpha, tb.beta, eps_th
                )
                total += vs * val
                w = mpfr(v) ** (-sigma)
                err_taylor += w * K * (tb.err_exp + tb.err_trunc)
                err_theta += w * eps_th
                op_count += len(tb.z) + 8
            ledger["taylor"] = float(err_taylor)
            ledger["theta"] = float(err_theta)
        else:
            n_anchors = 0
            ledger["taylor"] = 0.0
            ledger["theta"] = 0.0
        ledger["assembly_roundoff"] = float(
            (len(plan.anchors) + M1 + 16) * 8 * mpfr(2) ** (4 - bits)
        )
        bound = sum(ledger.values())
        return LResult(
            value=mpc(total),
            abs_error_bound=float(bound),
            ledger=ledger,
            n_anchors=n_anchors,
            op_count=op_count,
        )


# ---------------------------------------------------------------------------
# functional equation consistency


def _log_gamma(z, tol_log2=-80):
    """log Gamma(z) by the Stirling series with integer shift.

    Shifts z rightward until the series terms (Bernoulli over odd powers)
    visibly converge, then sums until below 2^tol_log2.
    """
    from .sumtools import bernoulli_fr

    z = mpc(z)
    shift = mpc(0)
    while z.real < 24:
        shift += gmpy2.log(z)
        z += 1
    half_log_2pi = gmpy2.log(2 * gmpy2.const_pi()) / 2
    out = (z - mpfr(1) / 2) * gmpy2.log(z) - z + half_log_2pi
    zpow = 1 / z
    z2 = zpow * zpow
    n = 1
    while True:
        b = bernoulli_fr(2 * n)
        term = to_mpfr(b) / (2 * n * (2 * n - 1)) * zpow
        out += term
        if abs(term) < mpfr(2) ** tol_log2 or n > 64:
            break
        zpow *= z2
        n += 1
    return out - shift


def functional_equation_check(spec, tables, s, eps):
    """Defect of the completed-L symmetry at Re(s) = 1/2.

    With xi(s, chi) = (q/pi)^(s/2) Gamma((s+a)/2) L(s, chi) and a the parity
    of chi, returns |xi(1-s, conj chi) - i^a sqrt(q) tau(chi)^(-1) xi(s, chi)|.
    """
    s = complex(s)
    if abs(s.real - 0.5) > 1e-12:
        raise ValueError("consistency check requires Re(s) = 1/2")
    if not spec.is_primitive():
        raise ValueError("functional equation in this form needs primitive chi")
    q = spec.q
    parity = char_parity(spec, tables)
    bits = choose_precision(eps / 8, op_count_bound=64, magnitude_bound=q)
    with working_precision(bits):
        conj_spec = spec.conjugate()
        from .character import precompute_tables

        conj_tables = precompute_tables(conj_spec)
        lam_budget = eps  # absolute budgets for the two L-values
        L_s = l_value(LQuery(spec=spec, s=s, eps_abs=lam_budget), tables).value
        L_1ms = l_value(LQuery(spec=conj_spec, s=1 - s, eps_abs=lam_budget), conj_tables).value
        tau = gauss_sum(spec, tables, lam_budget)
        qpi = mpfr(q) / gmpy2.const_pi()

        def xi(sv, Lv):
            sv = mpc(sv.real, sv.imag) if isinstance(sv, complex) else sv
            return (
                gmpy2.exp(sv / 2 * gmpy2.log(qpi))
                * gmpy2.exp(_log_gamma((sv + parity) / 2))
                * Lv
            )

        lhs = xi(1 - s, L_1ms)
        rhs = mpc(0, 1) ** parity * gmpy2.sqrt(mpfr(q)) / tau * xi(s, L_s)
        return float(abs(lhs - rhs))
