"""Command-line front end: JSON-lines output for sums, L-values and benchmarks.

Each result is one JSON object per line with a common shape: the echoed
input, re/im of the value, the claimed absolute error bound, wall time,
an operation count, and (where the library produces one) the error-budget
ledger.  `--human` appends a readable rendering to each line's data on
standard error.  Exit codes: 0 success, 2 validation error, 3 refused guard
(e.g. a brute-force oracle request beyond its size limit).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from gmpy2 import mpc

from . import dualsum as _dualsum
from . import theta as _theta
from .character import CharacterSpec, eval_char, precompute_tables
from .dualsum import dual_char_sum, real_char_at_real
from .lfunction import LQuery, functional_equation_check, l_value
from .theta import theta_brute, theta_fast
from .twisted import char_sum, gauss_sum, twisted_theta

BRUTE_THETA_CAP = 2 * 10**6
BRUTE_SUM_CAP = 2 * 10**6


class GuardRefused(Exception):
    """A size guard declined to run a brute-force path."""


def _parse_q_factors(text):
    """'3^6' or '2^7*3^3' -> [(p, a), ...]."""
    factors = []
    for part in text.split("*"):
        part = part.strip()
        if "^" in part:
            p_s, a_s = part.split("^", 1)
            p, a = int(p_s), int(a_s)
        else:
            p, a = int(part), 1
        if p < 2 or a < 1:
            raise ValueError("bad factor %r in --q-factors" % part)
        factors.append((p, a))
    return factors


def _make_spec(args):
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            return CharacterSpec.from_json(fh.read())
    if getattr(args, "q_factors", None):
        factors = _parse_q_factors(args.q_factors)
    elif getattr(args, "q", None):
        factors = args.q  # from_exponents factorizes plain integers
    else:
        raise ValueError("give one of --spec, --q-factors, --q")
    two_adic = None
    if getattr(args, "two_adic", None):
        e1_s, e2_s = args.two_adic.split(",")
        two_adic = (int(e1_s), int(e2_s))
    return CharacterSpec.from_exponents(
        factors, omega_exps=getattr(args, "omega", None), two_adic=two_adic
    )


def _cache_dir(args):
    return args.cache or os.environ.get("POWERCHAR_CACHE")


def _parse_complex(text):
    return complex(text.replace("i", "j"))


def _phase_arg(text):
    """Rational-looking phases ('3/7') stay exact; otherwise float."""
    if "/" in text:
        return Fraction(text)
    return float(text)


def _op_count():
    return sum(_theta.stats.values()) + sum(_dualsum.stats.values())


def _emit(args, record):
    if args.deterministic and "wall_ms" in record:
        record["wall_ms"] = 0.0  # byte-identical output across runs
    line = json.dumps(record, sort_keys=bool(args.deterministic))
    out = sys.stdout if args.output is None else args.output
    out.write(line + "\n")
    if args.human:
        parts = ["%s=%s" % (k, v) for k, v in record.items() if k not in ("budget_ledger",)]
        print("  " + "  ".join(parts), file=sys.stderr)


def _timed(fn):
    t0 = time.perf_counter()
    ops0 = _op_count()
    value = fn()
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return value, wall_ms, _op_count() - ops0


def _complex_fields(value):
    value = mpc(value)
    return {"re": float(value.real), "im": float(value.imag)}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_charsum(args):
    spec = _make_spec(args)
    tables = precompute_tables(spec, cache_dir=_cache_dir(args))
    value, wall_ms, ops = _timed(lambda: char_sum(spec, tables, args.K, args.eps))
    rec = {"cmd": "charsum", "q": spec.q, "K": args.K, "eps": args.eps}
    rec.update(_complex_fields(value))
    rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
    if args.oracle:
        rec.update(_oracle_direct_sum(spec, tables, args.K, value))
    _emit(args, rec)


def _cmd_twisted(args):
    spec = _make_spec(args)
    tables = precompute_tables(spec, cache_dir=_cache_dir(args))
    alpha, beta = _phase_arg(args.alpha), _phase_arg(args.beta)
    value, wall_ms, ops = _timed(
        lambda: twisted_theta(spec, tables, args.K, args.v, args.j, alpha, beta, args.eps)
    )
    rec = {
        "cmd": "twisted",
        "q": spec.q,
        "K": args.K,
        "v": args.v,
        "j": args.j,
        "alpha": str(alpha),
        "beta": str(beta),
        "eps": args.eps,
    }
    rec.update(_complex_fields(value))
    rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
    _emit(args, rec)


def _cmd_theta(args):
    alpha, beta = _phase_arg(args.alpha), _phase_arg(args.beta)
    value, wall_ms, ops = _timed(
        lambda: theta_fast(args.K, args.j, alpha, beta, args.eps)
    )
    rec = {
        "cmd": "theta",
        "K": args.K,
        "j": args.j,
        "alpha": str(alpha),
        "beta": str(beta),
        "eps": args.eps,
    }
    rec.update(_complex_fields(value))
    rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
    if args.oracle:
        if args.K > BRUTE_THETA_CAP:
            raise GuardRefused("brute-force theta limited to K <= %d" % BRUTE_THETA_CAP)
        brute = theta_brute(args.K, args.j, alpha, beta)
        rec.update(_prefix("oracle", brute))
        rec["oracle_diff"] = float(abs(mpc(value) - mpc(brute)))
    _emit(args, rec)


def _cmd_gauss(args):
    spec = _make_spec(args)
    tables = precompute_tables(spec, cache_dir=_cache_dir(args))
    value, wall_ms, ops = _timed(lambda: gauss_sum(spec, tables, args.eps))
    rec = {"cmd": "gauss", "q": spec.q, "eps": args.eps}
    rec.update(_complex_fields(value))
    rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
    rec["abs_value"] = float(abs(mpc(value)))
    if args.oracle:
        rec.update(
            _oracle_direct_twisted(spec, tables, spec.q, Fraction(1, spec.q), value)
        )
    _emit(args, rec)


def _cmd_lfunc(args):
    spec = _make_spec(args)
    tables = precompute_tables(spec, cache_dir=_cache_dir(args))
    s = _parse_complex(args.s)
    query = LQuery(
        spec=spec,
        s=s,
        lam=args.lam,
        eps_abs=args.eps_abs,
        subdivision=args.subdivision,
    )
    res, wall_ms, ops = _timed(lambda: l_value(query, tables))
    rec = {
        "cmd": "lfunc",
        "q": spec.q,
        "s": [s.real, s.imag],
        "lam": args.lam,
        "eps_abs": args.eps_abs,
        "subdivision": args.subdivision,
    }
    rec.update(_complex_fields(res.value))
    rec.update(
        abs_error_bound=res.abs_error_bound,
        wall_ms=wall_ms,
        op_count=ops + res.op_count,
        budget_ledger={k: float(v) for k, v in res.ledger.items()},
        n_anchors=res.n_anchors,
    )
    if args.fe_check:
        rec["fe_defect"] = functional_equation_check(spec, tables, s, query.budget)
    _emit(args, rec)


def _cmd_dual(args):
    spec = _make_spec(args)
    tables = precompute_tables(spec, cache_dir=_cache_dir(args))
    value, wall_ms, ops = _timed(lambda: dual_char_sum(spec, tables, args.L, args.eps))
    rec = {"cmd": "dual", "q": spec.q, "L": args.L, "eps": args.eps}
    rec.update(_complex_fields(value))
    rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
    if args.oracle:
        rec.update(_oracle_direct_sum(spec, tables, args.L, value))
    _emit(args, rec)


def _cmd_bench(args):
    """Timing table over a prime-power family q = p^a (C-scaling evidence)."""
    base_s, _, _ = args.family.partition("^")
    p = int(base_s)
    a_lo, _, a_hi = args.a.partition("..")
    for a in range(int(a_lo), int(a_hi or a_lo) + 1):
        spec = CharacterSpec.from_exponents([(p, a)], omega_exps=args.omega)
        tables = precompute_tables(spec, cache_dir=_cache_dir(args))
        # default just below a full period; K = q would reduce to zero terms
        K = args.K or max(spec.q - 1, 1)
        value, wall_ms, ops = _timed(lambda: char_sum(spec, tables, K, args.eps))
        rec = {"cmd": "bench", "q": spec.q, "p": p, "a": a, "K": K, "eps": args.eps}
        rec.update(_complex_fields(value))
        rec.update(abs_error_bound=args.eps, wall_ms=wall_ms, op_count=ops, budget_ledger=None)
        _emit(args, rec)


def _cmd_tables(args):
    spec = _make_spec(args)
    cache = _cache_dir(args)
    t0 = time.perf_counter()
    precompute_tables(spec, cache_dir=cache)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    rec = {
        "cmd": "tables",
        "q": spec.q,
        "factors": [list(f) for f in spec.factors],
        "cache_dir": cache,
        "wall_ms": wall_ms,
    }
    _emit(args, rec)


# ---------------------------------------------------------------------------
# oracle helpers


def _prefix(tag, value):
    value = mpc(value)
    return {tag + "_re": float(value.real), tag + "_im": float(value.imag)}


def _oracle_direct_sum(spec, tables, K, value):
    if K > BRUTE_SUM_CAP:
        raise GuardRefused("direct summation limited to K <= %d" % BRUTE_SUM_CAP)
    from .numerics import e_phase_mpfr, to_mpfr

    total = mpc(0)
    for n in range(K):
        chi = eval_char(spec, tables, n % spec.q)
        if not chi.is_zero:
            total += e_phase_mpfr(to_mpfr(chi.phase().r))
    rec = _prefix("oracle", total)
    rec["oracle_diff"] = float(abs(mpc(value) - total))
    return rec


def _oracle_direct_twisted(spec, tables, K, alpha, value):
    if K > BRUTE_SUM_CAP:
        raise GuardRefused("direct summation limited to K <= %d" % BRUTE_SUM_CAP)
    from .numerics import e_phase_mpfr, mod1, to_mpfr

    total = mpc(0)
    for n in range(K):
        chi = eval_char(spec, tables, n % spec.q)
        if not chi.is_zero:
            total += e_phase_mpfr(to_mpfr(mod1(chi.phase().r + alpha * n)))
    rec = _prefix("oracle", total)
    rec["oracle_diff"] = float(abs(mpc(value) - total))
    return rec


# ---------------------------------------------------------------------------
# argument plumbing


def _add_spec_args(sp):
    sp.add_argument("--spec", help="character spec JSON file")
    sp.add_argument("--q-factors", dest="q_factors", help="modulus as 'p^a*p^a', e.g. 3^6")
    sp.add_argument("--q", type=int, help="modulus (factorized automatically)")
    sp.add_argument("--omega", type=int, default=None, help="character exponent for every odd prime component")
    sp.add_argument("--two-adic", dest="two_adic", help="'e1,e2' exponents when 8 | q")


def _add_common(sp, oracle=True):
    sp.add_argument("--eps", type=float, default=1e-10, help="absolute accuracy target")
    sp.add_argument("--cache", help="table cache directory (default: $POWERCHAR_CACHE)")
    sp.add_argument("--human", action="store_true", help="readable echo on stderr")
    sp.add_argument("--threads", type=int, default=1, help="accepted for interface stability; execution is single-threaded")
    sp.add_argument(
        "--deterministic",
        action="store_true",
        help="byte-stable JSON output (sorted keys)",
    )
    sp.add_argument("--out", dest="out_path", help="write JSON lines to a file instead of stdout")
    if oracle:
        sp.add_argument("--oracle", action="store_true", help="also run the brute-force path (size-guarded)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="powerchar",
        description="character sums, quadratic exponential sums and L-values for power-full moduli",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("charsum", help="sum of chi(k) over 0 <= k < K")
    _add_spec_args(sp)
    sp.add_argument("--K", type=int, required=True)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_charsum)

    sp = sub.add_parser("twisted", help="polynomially-weighted, quadratically twisted character sum")
    _add_spec_args(sp)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--v", type=int, default=0, help="shift: sum over chi(v+k)")
    sp.add_argument("--j", type=int, default=0, help="weight (k/K)^j")
    sp.add_argument("--alpha", default="0", help="linear phase (float or exact fraction)")
    sp.add_argument("--beta", default="0", help="quadratic phase (float or exact fraction)")
    _add_common(sp, oracle=False)
    sp.set_defaults(fn=_cmd_twisted)

    sp = sub.add_parser("theta", help="quadratic exponential sum sum (k/K)^j e(alpha k + beta k^2)")
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--j", type=int, default=0)
    sp.add_argument("--alpha", default="0")
    sp.add_argument("--beta", default="0")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_theta)

    sp = sub.add_parser("gauss", help="Gauss sum tau(chi)")
    _add_spec_args(sp)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_gauss)

    sp = sub.add_parser("lfunc", help="L(s, chi) with error-budget ledger")
    _add_spec_args(sp)
    sp.add_argument("--s", required=True, help="complex s, e.g. '0.5+2j'")
    sp.add_argument("--lam", type=float, default=None, help="accuracy exponent: error <= (q(|s|+1))^-lam")
    sp.add_argument("--eps-abs", dest="eps_abs", type=float, default=None)
    sp.add_argument("--subdivision", choices=("ratio", "dyadic"), default="ratio")
    sp.add_argument("--fe-check", action="store_true", help="also report the functional-equation defect")
    _add_common(sp, oracle=False)
    sp.set_defaults(fn=_cmd_lfunc)

    sp = sub.add_parser("dual", help="short sum of a real primitive character via Fourier duality")
    _add_spec_args(sp)
    sp.add_argument("--L", type=int, required=True)
    _add_common(sp)
    sp.set_defaults(fn=_cmd_dual)

    sp = sub.add_parser("bench", help="timing table over a prime-power family")
    sp.add_argument("--family", required=True, help="prime base, e.g. '5^a'")
    sp.add_argument("--a", required=True, help="exponent range 'lo..hi'")
    sp.add_argument("--K", type=int, default=None, help="sum length (default: q - 1)")
    sp.add_argument("--omega", type=int, default=1)
    _add_common(sp, oracle=False)
    sp.set_defaults(fn=_cmd_bench)

    sp = sub.add_parser("tables", help="build (and cache) discrete-log tables")
    _add_spec_args(sp)
    _add_common(sp, oracle=False)
    sp.set_defaults(fn=_cmd_tables)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    args.output = None
    if getattr(args, "out_path", None):
        args.output = open(args.out_path, "w")
    try:
        args.fn(args)
    except GuardRefused as exc:
        print("refused: %s" % exc, file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    finally:
        if args.output is not None:
            args.output.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
