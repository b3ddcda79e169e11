"""Exact quadratic phases for characters on the progression 1 + p^b x.

For chi mod p^a and b = ceil(a/3), the restriction of chi to 1 + p^b Z is a
character of the group (1 + p^b Z)/(1 + p^a Z) and is given exactly by a
quadratic exponential: chi(1 + p^b x) = e(lin*x + quad*x^2) with rational
lin, quad whose denominators divide p^{a-b}.  This file computes (lin, quad)
from a handful of eval_char calls and exposes the substitution x = m*k used
when a long sum is split into arithmetic progressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .character import CharValue, eval_char
from .numerics import PhaseMod1


@dataclass(frozen=True)
class PostnikovData:
    p: int
    a: int
    b: int
    kind: str  # "odd" | "two_large" | "two_small"
    L: int  # L (odd), L1 (two_large), 0 for two_small
    L2: int = 0  # two_small only
    L3: int = 0  # two_small only
    lin: PhaseMod1 = PhaseMod1(Fraction(0))
    quad: PhaseMod1 = PhaseMod1(Fraction(0))


def _char_component_value(spec, tables, comp, c):
    """chi_p(c) for the single component comp, as a CharValue."""
    # evaluate the full character at a CRT lift that is 1 at every other prime
    q = spec.q
    mod = comp.modulus
    rest = q // mod
    if rest == 1:
        return eval_char(spec, tables, c)
    inv = pow(rest, -1, mod)
    lift = (1 + rest * ((inv * (c - 1)) % mod)) % q
    return eval_char(spec, tables, lift)


def _root_of_unity_exponent(val, denom):
    """Integer B with val = e(B/denom); asserts val's order divides denom."""
    if val.is_zero:
        raise ValueError("character value is zero on a unit?")
    if denom % val.den != 0:
        raise AssertionError(
            "character value e(%d/%d) has order not dividing %d" % (val.num, val.den, denom)
        )
    return val.num * (denom // val.den)


def postnikov_data(spec, tables, comp):
    """Quadratic phase data for one component of spec (character mod p^a)."""
    p, a = comp.p, comp.a
    b = -(-a // 3)

    if p == 2 and a <= 3:
        return _two_small(spec, tables, comp, b)

    pab = p ** (a - b)
    if pab == 1:
        # a = b = 1: chi(1 + p x) = 1 identically
        return PostnikovData(p=p, a=a, b=b, kind="odd", L=0)

    val = _char_component_value(spec, tables, comp, (1 + p**b) % (p**a))
    B = _root_of_unity_exponent(val, pab)

    if p == 2:
        # a > 3, so b >= 2 and (1 - 2^(b-1)) is odd
        L1 = B * pow(1 - 2 ** (b - 1), -1, pab) % pab
        lin = PhaseMod1(Fraction(L1, pab))
        e2 = a - 2 * b + 1
        quad = PhaseMod1(Fraction(-L1, 2**e2)) if e2 > 0 else PhaseMod1(Fraction(0))
        return PostnikovData(p=p, a=a, b=b, kind="two_large", L=L1, lin=lin, quad=quad)

    L = B * pow(2 - p**b, -1, pab) % pab
    lin = PhaseMod1(Fraction(2 * L, pab))
    quad = (
        PhaseMod1(Fraction(-L, p ** (a - 2 * b)))
        if a - 2 * b > 0
        else PhaseMod1(Fraction(0))
    )
    return PostnikovData(p=p, a=a, b=b, kind="odd", L=L, lin=lin, quad=quad)


def _two_small(spec, tables, comp, b):
    """Moduli 2, 4, 8: chi(1+2x) = e((L2 x + L3 x^2)/4) by case analysis."""
    p, a = 2, comp.a
    one = CharValue(0, 1)
    neg = CharValue(1, 2)
    if a == 1:
        L2, L3 = 0, 0
    elif a == 2:
        L2, L3 = (0, 0) if comp.e_mod4() == 0 else (2, 0)
    else:
        c3 = _char_component_value(spec, tables, comp, 3)
        c5 = _char_component_value(spec, tables, comp, 5)
        if c3 == one and c5 == one:
            L2, L3 = 0, 0
        elif c3 == one and c5 == neg:
            L2, L3 = 1, -1
        elif c3 == neg and c5 == one:
            L2, L3 = 2, 0
        elif c3 == neg and c5 == neg:
            L2, L3 = 1, 1
        else:
            raise AssertionError("chi(3), chi(5) not in {1,-1} mod 8")
    # L2 x + L3 x^2 is even for every x, so the phase is a half-integer
    assert (L2 + L3) % 2 == 0
    return PostnikovData(
        p=p,
        a=a,
        b=b,
        kind="two_small",
        L=0,
        L2=L2,
        L3=L3,
        lin=PhaseMod1(Fraction(L2, 4)),
        quad=PhaseMod1(Fraction(L3, 4)),
    )


def progression_phase(data, step_multiplier):
    """(alpha1, beta1) with chi(1 + p^b m k) = e(alpha1 k + beta1 k^2)."""
    m = int(step_multiplier)
    return data.lin * m, data.quad * (m * m)
