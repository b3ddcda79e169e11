"""Dirichlet characters mod q = prod p^a, evaluated in poly-log time.

A character is presented componentwise: for each odd prime power (and for
2^a with a <= 2) a primitive root g and an integer exponent omega_exp mod
phi(p^a), meaning chi(g) = e(omega_exp/phi(p^a)); for 2^a with a >= 3 the
pair (e1, e2) against the decomposition of odd residues as (-1)^v1 * 5^v2.

Evaluation reduces chi(c) to a discrete log mod p^a, which splits into a
lookup in the order-(p-1) subgroup plus a base-p digit recursion through the
order-p subgroup; both subgroups are tabulated once per (p, a, g).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt

import gmpy2

from .numerics import PhaseMod1, e_of

TABLE_MAGIC = b"PCHR1"


# ---------------------------------------------------------------------------
# factorization / primitive roots


def is_prime(n):
    return n >= 2 and gmpy2.is_prime(int(n))


def factorize(q):
    """Exact factorization of q >= 1 by trial division (desk-scale moduli).

    Returns a list of (p, a) pairs, p ascending.  A pluggable factorizer can
    replace this for larger q; everything downstream only needs the pairs.
    """
    q = int(q)
    if q < 1:
        raise ValueError("modulus must be a positive integer")
    pairs = []
    n = q
    d = 2
    while d * d <= n:
        if n % d == 0:
            a = 0
            while n % d == 0:
                n //= d
                a += 1
            pairs.append((d, a))
        d += 1 if d == 2 else 2
    if n > 1:
        pairs.append((n, 1))
    assert prod_pow(pairs) == q
    return pairs


def prod_pow(pairs):
    out = 1
    for p, a in pairs:
        out *= p**a
    return out


def multiplicative_order(g, modulus, group_order, order_factors):
    """Exact order of g mod modulus given the factorization of the group order."""
    if gcd(g, modulus) != 1:
        raise ValueError("g not a unit")
    order = group_order
    for r, _ in order_factors:
        while order % r == 0 and pow(g, order // r, modulus) == 1:
            order //= r
    return order if pow(g, order, modulus) == 1 else None


def is_primitive_root(g, p, a):
    mod = p**a
    phi = (p - 1) * p ** (a - 1)
    if gcd(g, mod) != 1:
        return False
    for r, _ in factorize(phi):
        if pow(g, phi // r, mod) == 1:
            return False
    return True


def find_primitive_root(p, a=1):
    """Smallest primitive root mod p^a (p an odd prime)."""
    if p == 2:
        if a <= 2:
            return 3 if a == 2 else 1
        raise ValueError("no primitive root mod 2^a for a >= 3")
    if not is_prime(p):
        raise ValueError("p must be prime")
    # a primitive root mod p^2 is primitive mod p^a for all a >= 2
    check_a = min(a, 2)
    g = 2
    while not is_primitive_root(g, p, check_a):
        g += 1
    return g


# ---------------------------------------------------------------------------
# character presentation


@dataclass(frozen=True)
class Component:
    """One prime-power piece of the character presentation."""

    p: int
    a: int
    g: int = 0  # primitive root (unused when p=2, a>=3)
    omega_exp: int = 0  # exponent of chi(g) against e(1/phi(p^a))
    e1: int = 0  # p=2, a>=3 only: chi(-1) = (-1)^e1
    e2: int = 0  # p=2, a>=3 only: chi(5) = e(e2 / 2^(a-2))

    @property
    def modulus(self):
        return self.p**self.a

    @property
    def phi(self):
        return (self.p - 1) * self.p ** (self.a - 1)

    @property
    def two_adic(self):
        return self.p == 2 and self.a >= 3

    def order(self):
        """Order of this component character in the dual group."""
        if self.two_adic:
            half = 2 ** (self.a - 2)
            o2 = half // gcd(self.e2, half)
            return max(2 if self.e1 % 2 else 1, o2)
        m = self.phi
        return m // gcd(self.omega_exp, m) if m > 0 else 1


class CharacterSpec:
    """A Dirichlet character mod q presented per prime-power component."""

    def __init__(self, components):
        self.components = tuple(components)
        seen = set()
        for comp in self.components:
            if comp.p in seen:
                raise ValueError("duplicate prime in character spec")
            seen.add(comp.p)
            if comp.p != 2 or comp.a <= 2:
                if not is_primitive_root(comp.g, comp.p, comp.a) and comp.modulus > 2:
                    raise ValueError(
                        "g=%d is not a primitive root mod %d^%d" % (comp.g, comp.p, comp.a)
                    )
                if comp.phi and not 0 <= comp.omega_exp < comp.phi:
                    raise ValueError("omega_exp out of range")
            else:
                if not (0 <= comp.e1 < 2 and 0 <= comp.e2 < 2 ** (comp.a - 2)):
                    raise ValueError("two-adic exponents out of range")
        self.q = prod_pow([(c.p, c.a) for c in self.components])
        self.factors = tuple(sorted((c.p, c.a) for c in self.components))

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_exponents(cls, q_or_factors, omega_exps=None, two_adic=None, roots=None):
        """Build a spec from a modulus (or factor list) plus raw exponents.

        omega_exps: mapping p -> omega_exp (or a single int applied to every
        non-two-adic component).  two_adic: (e1, e2) when 8 | q.
        """
        factors = (
            factorize(q_or_factors) if isinstance(q_or_factors, int) else list(q_or_factors)
        )
        comps = []
        for p, a in factors:
            if p == 2 and a >= 3:
                e1, e2 = two_adic if two_adic is not None else (0, 0)
                comps.append(Component(p=p, a=a, e1=e1 % 2, e2=e2 % 2 ** (a - 2)))
                continue
            g = None if roots is None else roots.get(p)
            if g is None:
                g = find_primitive_root(p, a)
            if omega_exps is None:
                w = 0
            elif isinstance(omega_exps, dict):
                w = omega_exps.get(p, 0)
            else:
                w = int(omega_exps)
            phi = (p - 1) * p ** (a - 1)
            comps.append(Component(p=p, a=a, g=g, omega_exp=w % phi if phi else 0))
        return cls(comps)

    @classmethod
    def from_json(cls, text_or_obj):
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, (str, bytes)) else text_or_obj
        factors = [tuple(x) for x in obj["q_factors"]]
        comps = []
        by_p = {c["p"]: c for c in obj.get("components", [])}
        two = obj.get("two_adic")
        for p, a in factors:
            if p == 2 and a >= 3:
                e1 = int(two["e1"]) if two else 0
                e2 = int(two["e2"]) if two else 0
                comps.append(Component(p=p, a=a, e1=e1 % 2, e2=e2 % 2 ** (a - 2)))
                continue
            entry = by_p.get(p, {})
            g = entry.get("g")
            if g is None:
                g = find_primitive_root(p, a)
            phi = (p - 1) * p ** (a - 1)
            w = int(entry.get("omega_exp", 0)) % phi if phi else 0
            comps.append(Component(p=p, a=a, g=int(g), omega_exp=w))
        return cls(comps)

    def to_json(self):
        obj = {"q_factors": [[c.p, c.a] for c in self.components], "components": []}
        for c in self.components:
            if c.two_adic:
                obj["two_adic"] = {"e1": c.e1, "e2": c.e2}
            else:
                obj["components"].append(
                    {"p": c.p, "a": c.a, "g": c.g, "omega_exp": c.omega_exp}
                )
        return json.dumps(obj)

    # -- structure ---------------------------------------------------------

    @property
    def phi(self):
        out = 1
        for c in self.components:
            out *= c.phi
        return out

    def order(self):
        from math import lcm

        return lcm(*[c.order() for c in self.components]) if self.components else 1

    @property
    def is_principal(self):
        return all(
            (c.omega_exp == 0 if not c.two_adic else (c.e1 == 0 and c.e2 == 0))
            for c in self.components
        )

    def is_primitive(self):
        """True iff the conductor equals q (componentwise test)."""
        for c in self.components:
            if c.p == 2:
                if c.a == 1:
                    return False  # mod-2 component is never primitive
                if c.a == 2 and c.e_mod4() == 0:
                    return False
                if c.a >= 3 and c.e2 % 2 == 0:
                    return False
            else:
                if c.a == 1 and c.omega_exp == 0:
                    return False
                if c.a >= 2 and c.omega_exp % c.p == 0:
                    return False
        return True

    def conjugate(self):
        comps = []
        for c in self.components:
            if c.two_adic:
                comps.append(
                    Component(p=c.p, a=c.a, e1=c.e1, e2=(-c.e2) % 2 ** (c.a - 2))
                )
            else:
                comps.append(
                    Component(
                        p=c.p, a=c.a, g=c.g, omega_exp=(-c.omega_exp) % c.phi if c.phi else 0
                    )
                )
        return CharacterSpec(comps)

    def __repr__(self):
        return "CharacterSpec(q=%d, %s)" % (
            self.q,
            ", ".join(
                "2^%d:(e1=%d,e2=%d)" % (c.a, c.e1, c.e2)
                if c.two_adic
                else "%d^%d:g=%d,w=%d" % (c.p, c.a, c.g, c.omega_exp)
                for c in self.components
            ),
        )


def _e_mod4(self):
    # helper attached to Component: the mod-4 character exponent for a=2
    return self.omega_exp % 2 if self.phi else 0


Component.e_mod4 = _e_mod4


# ---------------------------------------------------------------------------
# character values


class CharValue:
    """Exact chi(c): zero, or a root of unity e(num/den) with 0 <= num < den."""

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=1, zero=False):
        if zero:
            self.num, self.den = 0, 0
            return
        if type(num) is int and type(den) is int and den > 0:
            g = gcd(num, den)
            den //= g
            self.num, self.den = (num // g) % den, den
            return
        fr = Fraction(num, den)
        fr -= fr.numerator // fr.denominator
        self.num, self.den = fr.numerator, fr.denominator

    @classmethod
    def zero(cls):
        return cls(zero=True)

    @property
    def is_zero(self):
        return self.den == 0

    def phase(self):
        if self.is_zero:
            raise ValueError("zero has no phase")
        return PhaseMod1(Fraction(self.num, self.den))

    def __mul__(self, other):
        if self.is_zero or other.is_zero:
            return CharValue.zero()
        return CharValue(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __pow__(self, k):
        if self.is_zero:
            return CharValue.zero() if k > 0 else CharValue(0, 1)
        return CharValue(self.num * k, self.den)

    def conjugate(self):
        if self.is_zero:
            return CharValue.zero()
        return CharValue(-self.num, self.den)

    def __eq__(self, other):
        return (self.num, self.den) == (other.num, other.den)

    def __hash__(self):
        return hash((self.num, self.den))

    def to_complex(self, bits=None):
        if self.is_zero:
            return gmpy2.mpc(0)
        return e_of(self.phase(), bits)

    def __repr__(self):
        return "0" if self.is_zero else "e(%d/%d)" % (self.num, self.den)


# ---------------------------------------------------------------------------
# dlog tables


@dataclass
class ComponentTables:
    """Lookup tables + precomputed constants for one prime-power component."""

    p: int
    a: int
    g: int
    order_p: dict = field(default_factory=dict)  # residue -> exponent in [1, p]
    order_q: dict = field(default_factory=dict)  # residue -> exponent in [1, p-1]
    # cached constants for the digit recursion
    consts: tuple = ()

    def build(self):
        p, a, g = self.p, self.a, self.g
        mod = p**a
        if p == 2:
            if a >= 3:
                # order-2 subgroup inside <5>
                t = pow(5, 2 ** (a - 3), mod)
                self.order_p = {t: 1, 1: 2}
                inv5 = pow(5, -1, mod)
                self.consts = (mod, inv5)
            return self
        if a >= 2:
            gp_small = pow(g, (p - 1) * p ** (a - 2), mod)
            self.order_p = _power_table(gp_small, p, mod)
        gq = pow(g, p ** (a - 1), mod)
        self.order_q = _power_table(gq, p - 1, mod)
        inv_gp = pow(pow(g, p - 1, mod), -1, mod) if a >= 2 else 1
        self.consts = (mod, inv_gp)
        return self

    # -- discrete logs -----------------------------------------------------

    def dlog(self, c):
        """x with g^x = c mod p^a, or None if p | c.  p odd."""
        p, a, g = self.p, self.a, self.g
        mod, inv_gp = self.consts
        c %= mod
        if c % p == 0:
            return None
        if a == 1:  # prime modulus: the table answers directly
            return self.order_q[c] % (p - 1)
        # order-(p-1) part
        l2 = self.order_q[pow(c, p ** (a - 1), mod)] % (p - 1)
        # order-p^(a-1) part, base-p digits
        if a >= 2:
            b = self.order_p[pow(c, (p - 1) * p ** (a - 2), mod)] % p
            acc = b
            if a >= 3:
                cp = pow(c, p - 1, mod)
                pr = p
                for r in range(1, a - 1):
                    alpha = cp * pow(inv_gp, acc, mod) % mod
                    beta = pow(alpha, p ** (a - r - 2), mod)
                    acc += (self.order_p[beta] % p) * pr
                    pr *= p
            l1 = acc
        else:
            l1 = 0
        pa1 = p ** (a - 1)
        r, s = _bezout(p - 1, pa1)
        return (r * (p - 1) * l1 + s * pa1 * l2) % ((p - 1) * pa1)

    def dlog2(self, c):
        """(v1, v2) with c = (-1)^v1 * 5^v2 mod 2^a (a >= 3), or None if c even."""
        a = self.a
        mod, inv5 = self.consts
        c %= mod
        if c % 2 == 0:
            return None
        v1 = 0 if c % 4 == 1 else 1
        if v1:
            c = (-c) % mod
        # digit recursion inside <5>, order 2^(a-2)
        acc = 0
        for r in range(a - 2):
            beta = pow(c * pow(inv5, acc, mod) % mod, 2 ** (a - 3 - r), mod)
            bit = self.order_p[beta] % 2
            acc += bit << r
        return v1, acc


def _power_table(base, order, mod):
    tbl = {}
    x = 1
    for e in range(1, order + 1):
        x = x * base % mod
        tbl[x] = e
    if len(tbl) != order:
        raise ValueError("generator has wrong order (table collision)")
    return tbl


def _bezout(u, v):
    """(r, s) with r*u + s*v = 1 for coprime u, v (v may be 1)."""
    g, r, s = _xgcd(u, v)
    if g != 1:
        raise ValueError("not coprime")
    return r, s


def _xgcd(u, v):
    r0, r1, s0, s1, t0, t1 = u, v, 1, 0, 0, 1
    while r1:
        qt, r0, r1 = r0 // r1, r1, r0 % r1
        s0, s1 = s1, s0 - qt * s1
        t0, t1 = t1, t0 - qt * t1
    return r0, s0, t0


class DlogTables:
    """All per-component tables for one modulus (depends on (p,a,g) only)."""

    def __init__(self, comps):
        self.by_p = {t.p: t for t in comps}

    @classmethod
    def build(cls, spec, cache_dir=None):
        cache_dir = cache_dir or os.environ.get("POWERCHAR_CACHE")
        comps = []
        for c in spec.components:
            g = 5 if c.two_adic else c.g
            tbl = None
            if cache_dir:
                tbl = _cache_load(cache_dir, c.p, c.a, g)
            if tbl is None:
                tbl = ComponentTables(p=c.p, a=c.a, g=g).build()
                if cache_dir:
                    _cache_store(cache_dir, tbl)
            comps.append(tbl)
        return cls(comps)


def precompute_tables(spec, cache_dir=None):
    return DlogTables.build(spec, cache_dir)


# -- binary cache ------------------------------------------------------------
# File layout: magic "PCHR1"; then, per table, a block
#   p, a, g: little-endian u64 each; entry count: u64; entries as (residue,
#   exponent) u64 pairs.  A component contributes two consecutive blocks
#   (order-p table first, order-(p-1) table second); two-adic components
#   contribute one block (the order-2 table inside <5>, g recorded as 5).


def _tbl_path(cache_dir, p, a, g):
    return os.path.join(cache_dir, "pchr_%d_%d_%d.tbl" % (p, a, g))


def _pack_block(p, a, g, table):
    out = [struct.pack("<QQQQ", p, a, g, len(table))]
    for r, e in sorted(table.items()):
        out.append(struct.pack("<QQ", r, e))
    return b"".join(out)


def serialize_tables(tbl):
    blocks = [TABLE_MAGIC]
    blocks.append(_pack_block(tbl.p, tbl.a, tbl.g, tbl.order_p))
    if tbl.p != 2:
        blocks.append(_pack_block(tbl.p, tbl.a, tbl.g, tbl.order_q))
    return b"".join(blocks)


def deserialize_tables(data):
    if data[:5] != TABLE_MAGIC:
        raise ValueError("bad table cache magic")
    off = 5

    def read_block():
        nonlocal off
        p, a, g, n = struct.unpack_from("<QQQQ", data, off)
        off += 32
        tbl = {}
        for _ in range(n):
            r, e = struct.unpack_from("<QQ", data, off)
            off += 16
            tbl[r] = e
        return p, a, g, tbl

    p, a, g, order_p = read_block()
    out = ComponentTables(p=p, a=a, g=g, order_p=order_p)
    if p != 2:
        _, _, _, order_q = read_block()
        out.order_q = order_q
    # rebuild the cheap constants rather than trusting the file
    mod = p**a
    if p == 2:
        out.consts = (mod, pow(5, -1, mod)) if a >= 3 else (mod, 1)
    else:
        out.consts = (mod, pow(pow(g, p - 1, mod), -1, mod) if a >= 2 else 1)
    return out


def _cache_store(cache_dir, tbl):
    os.makedirs(cache_dir, exist_ok=True)
    with open(_tbl_path(cache_dir, tbl.p, tbl.a, tbl.g), "wb") as fh:
        fh.write(serialize_tables(tbl))


def _cache_load(cache_dir, p, a, g):
    path = _tbl_path(cache_dir, p, a, g)
    if not os.path.exists(path):
        return None
    try:
        with open(path, "rb") as fh:
            return deserialize_tables(fh.read())
    except (ValueError, struct.error):
        return None


# ---------------------------------------------------------------------------
# evaluation


def eval_char(spec, tables, c):
    """Exact chi(c) as a CharValue; c is any integer (reduced mod q)."""
    c = int(c) % spec.q if spec.q > 1 else 0
    if spec.q == 1:
        return CharValue(0, 1)
    comps = spec.components
    if len(comps) == 1 and not comps[0].two_adic and comps[0].p != 2:
        # single odd prime power: one dlog, integer arithmetic only
        comp = comps[0]
        x = tables.by_p[comp.p].dlog(c)
        if x is None:
            return CharValue.zero()
        return CharValue(comp.omega_exp * x, comp.phi)
    phase = Fraction(0)
    for comp in spec.components:
        t = tables.by_p[comp.p]
        if comp.two_adic:
            vv = t.dlog2(c)
            if vv is None:
                return CharValue.zero()
            v1, v2 = vv
            phase += Fraction(comp.e1 * v1, 2) + Fraction(comp.e2 * v2, 2 ** (comp.a - 2))
            continue
        if comp.p == 2:
            # a = 1 or 2; tiny groups, direct
            cm = c % comp.modulus
            if cm % 2 == 0:
                return CharValue.zero()
            if comp.a == 2 and cm == 3:
                phase += Fraction(comp.omega_exp, 2)
            continue
        x = t.dlog(c)
        if x is None:
            return CharValue.zero()
        phase += Fraction(comp.omega_exp * x, comp.phi)
    return CharValue(phase.numerator, phase.denominator)


def eval_char_numeric(spec, tables, c, bits=64):
    return eval_char(spec, tables, c).to_complex(bits)


def char_parity(spec, tables):
    """0 for even chi, 1 for odd (the exponent in chi(-1) = (-1)^parity)."""
    v = eval_char(spec, tables, spec.q - 1 if spec.q > 1 else 1)
    if v == CharValue(0, 1):
        return 0
    if v == CharValue(1, 2):
        return 1
    raise AssertionError("chi(-1) not in {1,-1}: %r" % (v,))


def char_exponent_table(spec, tables):
    """chi over a full period as a list of CharValue (multiplicative sieve).

    Used by oracles and by direct-summation fallbacks; cost O(q log q)-ish but
    with only O(pi(q)) dlog calls.
    """
    q = spec.q
    vals = [None] * q
    vals[0] = CharValue.zero() if q > 1 else CharValue(0, 1)
    if q > 1:
        vals[1 % q] = CharValue(0, 1)
    # smallest prime factor sieve
    spf = list(range(q))
    for i in range(2, isqrt(max(q - 1, 1)) + 1):
        if spf[i] == i:
            for k in range(i * i, q, i):
                if spf[k] == k:
                    spf[k] = i
    for n in range(2, q):
        p = spf[n]
        if p == n:
            vals[n] = eval_char(spec, tables, n)
        else:
            vals[n] = vals[p] * vals[n // p]
    return vals
