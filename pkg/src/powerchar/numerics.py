"""Configurable-precision arithmetic and exact mod-1 phase arithmetic.

Two kinds of numbers flow through this package:

* exact rationals -- phases that live in Q/Z, held as ``fractions.Fraction``
  wrapped in :class:`PhaseMod1` so reduction mod 1 is automatic and exact;
* high-precision binary floats -- gmpy2 ``mpfr``/``mpc`` at an explicitly
  chosen working precision.

Error tracking is by a-priori budget: :func:`choose_precision` converts an
(eps, operation count, magnitude) triple into a bit count B such that
C * M * 2^(-B+F) < eps, with F a fixed guard constant.  Individual values do
not carry interval bounds.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

# Guard bits per basic operation.  Generous; validated by the 4x-precision
# rerun test in the acceptance suite.
F_GUARD = 8

MIN_PRECISION = 16

# Global multiplier applied by working_precision; the audit suite sets it to
# 4 to rerun a computation with every internal context widened uniformly.
precision_scale = 1


def choose_precision(eps, op_count_bound=1, magnitude_bound=1):
    """Smallest bit count B with log2(magnitude) + log2(ops) + log2(1/eps) + F <= B.

    eps must lie in (0, 1/e); bounds must be >= 1.
    """
    eps = float(eps)
    if not (0.0 < eps < math.exp(-1)):
        raise ValueError("eps must be in (0, e^-1), got %r" % (eps,))
    if op_count_bound < 1 or magnitude_bound < 1:
        raise ValueError("op_count_bound and magnitude_bound must be >= 1")
    need = (
        math.log2(float(magnitude_bound))
        + math.log2(float(op_count_bound))
        + math.log2(1.0 / eps)
        + F_GUARD
    )
    return max(MIN_PRECISION, math.ceil(need))


@contextmanager
def working_precision(bits):
    """Run a block under a gmpy2 context with the given mantissa precision."""
    old = gmpy2.get_context()
    gmpy2.set_context(gmpy2.context(precision=int(bits) * precision_scale))
    try:
        yield
    finally:
        gmpy2.set_context(old)


def mod1(fr):
    """Exact x mod 1 for a Fraction (result in [0, 1))."""
    return fr - (fr.numerator // fr.denominator)


class PhaseMod1:
    """An exact rational phase, always reduced into [0, 1).

    Arithmetic never leaves the exact world; conversion to a complex root of
    unity happens only in :func:`e_of`.
    """

    __slots__ = ("r",)

    def __init__(self, value=0):
        fr = value if isinstance(value, Fraction) else Fraction(value)
        self.r = mod1(fr)

    def __add__(self, other):
        o = other.r if isinstance(other, PhaseMod1) else Fraction(other)
        return PhaseMod1(self.r + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = other.r if isinstance(other, PhaseMod1) else Fraction(other)
        return PhaseMod1(self.r - o)

    def __neg__(self):
        return PhaseMod1(-self.r)

    def __mul__(self, k):
        """Scale by an integer or exact rational (phase of x -> phase of k*x)."""
        return PhaseMod1(self.r * (k if isinstance(k, (int, Fraction)) else Fraction(k)))

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, PhaseMod1):
            return self.r == other.r
        return self.r == mod1(Fraction(other))

    def __hash__(self):
        return hash(self.r)

    def __repr__(self):
        return "PhaseMod1(%s)" % (self.r,)

    @property
    def is_zero(self):
        return self.r == 0


def phase_add(a, b):
    """Exact (a + b) mod 1."""
    a = a if isinstance(a, PhaseMod1) else PhaseMod1(a)
    return a + b


def to_mpfr(x):
    """Lossless-as-possible conversion of int/float/Fraction/mpfr to mpfr."""
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / mpfr(x.denominator)
    return mpfr(x)


def e_phase_mpfr(x):
    """exp(2*pi*i*x) for an mpfr x (caller is responsible for |x| being O(1))."""
    t = 2 * gmpy2.const_pi() * x
    s, c = gmpy2.sin_cos(t)
    return mpc(c, s)


def e_of(phase, bits=None):
    """exp(2*pi*i*phase) with |error| <= 2^(-bits+F).

    `phase` may be a PhaseMod1, Fraction, int, float, or mpfr.  When `bits`
    is given, the value is computed under that precision; otherwise the
    ambient gmpy2 context is used.
    """
    if bits is not None:
        if bits < MIN_PRECISION:
            raise ValueError("bits must be >= %d" % MIN_PRECISION)
        with working_precision(bits + F_GUARD):
            return e_of(phase)
    if isinstance(phase, PhaseMod1):
        fr = phase.r
    elif isinstance(phase, Fraction):
        fr = mod1(phase)
    else:
        fr = None
    if fr is not None:
        # exact special points keep downstream identity tests exact
        if fr == 0:
            return mpc(1)
        if 2 * fr == 1:
            return mpc(-1)
        if 4 * fr == 1:
            return mpc(0, 1)
        if 4 * fr == 3:
            return mpc(0, -1)
        return e_phase_mpfr(to_mpfr(fr))
    x = to_mpfr(phase)
    return e_phase_mpfr(x - gmpy2.floor(x))
