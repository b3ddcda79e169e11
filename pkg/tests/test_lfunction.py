"""L(s, chi) pipeline against independent Hurwitz-zeta / digamma oracles."""

import math

import pytest

from powerchar.character import CharacterSpec, precompute_tables
from powerchar.lfunction import (
    LQuery,
    functional_equation_check,
    l_value,
    plan_blocks,
    truncation_length,
)
from conftest import l_oracle, random_spec


def budget(q, s, lam):
    return (q * (abs(s) + 1.0)) ** (-lam)


def test_truncation_remainder_shrinks():
    M0, r0 = truncation_length(9, complex(0.75), 0)
    M1, r1 = truncation_length(9, complex(0.75), 1)
    assert M1 >= M0 and r1 <= r0
    assert r1 <= 0.1 * budget(9, complex(0.75), 1)


def test_plan_partitions_bulk(rng):
    spec = random_spec(729, rng)
    q = LQuery(spec=spec, s=complex(0.6, 3.0), lam=1)
    plan = plan_blocks(q)
    covered = sum(K for _, K in plan.anchors)
    assert covered == plan.M - plan.M1
    # anchors are contiguous from M1 up
    pos = plan.M1
    for v, K in plan.anchors:
        assert v == pos
        pos += K
    assert pos == plan.M


@pytest.mark.parametrize("q", [9, 25, 27])
@pytest.mark.parametrize("s", [complex(0.6), complex(0.75, 5.0), complex(1.0)])
def test_l_value_oracle_small(q, s, rng, tables_cache):
    spec = random_spec(q, rng)
    tables = tables_cache(spec)
    want = l_oracle(spec, tables, s)
    for lam in (0, 1):
        res = l_value(LQuery(spec=spec, s=s, lam=lam), tables)
        err = abs(complex(res.value) - want)
        assert err <= budget(q, s, lam) + 1e-20, (q, s, lam, err)
        assert err <= res.abs_error_bound + 1e-20


def test_l_value_eps_abs(rng, tables_cache):
    spec = random_spec(49, rng)
    tables = tables_cache(spec)
    s = complex(0.5, 2.0)
    res = l_value(LQuery(spec=spec, s=s, eps_abs=1e-8), tables)
    want = l_oracle(spec, tables, s)
    assert abs(complex(res.value) - want) <= 1e-8


def test_conjugation_symmetry(rng, tables_cache):
    spec = random_spec(27, rng)
    tables = tables_cache(spec)
    conj = spec.conjugate()
    conj_tables = tables_cache(conj)
    s = complex(0.7, 3.0)
    a = complex(l_value(LQuery(spec=conj, s=s, lam=1), conj_tables).value)
    b = complex(l_value(LQuery(spec=spec, s=complex(s.real, -s.imag), lam=1), tables).value)
    assert abs(a - b.conjugate()) <= 2 * budget(27, s, 1)


def test_subdivision_schemes_agree(rng, tables_cache):
    spec = random_spec(125, rng)
    tables = tables_cache(spec)
    s = complex(0.6, 4.0)
    a = complex(l_value(LQuery(spec=spec, s=s, lam=1, subdivision="ratio"), tables).value)
    b = complex(l_value(LQuery(spec=spec, s=s, lam=1, subdivision="dyadic"), tables).value)
    assert abs(a - b) <= 2 * budget(125, s, 1)


def test_ledger_totals_within_budget(rng, tables_cache):
    spec = random_spec(243, rng)
    tables = tables_cache(spec)
    res = l_value(LQuery(spec=spec, s=complex(0.5, 1.0), lam=1), tables)
    total = sum(res.ledger.values())
    assert total <= budget(243, complex(0.5, 1.0), 1)
    assert abs(res.abs_error_bound - total) <= 1e-18


def test_spot_value_q3_s1():
    # L(1, chi) for the quadratic character mod 3 has the closed form
    # pi / sqrt(27)
    spec = CharacterSpec.from_exponents(3, omega_exps={3: 1})
    tables = precompute_tables(spec)
    res = l_value(LQuery(spec=spec, s=complex(1.0), eps_abs=1e-11), tables)
    assert abs(complex(res.value) - math.pi / math.sqrt(27)) <= 1e-10


def test_query_validation(rng):
    spec = random_spec(9, rng)
    with pytest.raises(ValueError):
        LQuery(spec=spec, s=complex(0.3), lam=1)  # Re(s) out of range
    with pytest.raises(ValueError):
        LQuery(spec=spec, s=complex(0.6), lam=1, eps_abs=1e-8)  # both given
    with pytest.raises(ValueError):
        LQuery(spec=spec, s=complex(0.6))  # neither given
    with pytest.raises(ValueError):
        LQuery(spec=CharacterSpec.from_exponents(9), s=complex(0.6), lam=1)


def test_functional_equation_small():
    spec = CharacterSpec.from_exponents(5, omega_exps={5: 1})
    tables = precompute_tables(spec)
    defect = functional_equation_check(spec, tables, complex(0.5, 1.0), 1e-8)
    assert defect <= 1e-7


def test_functional_equation_rejects_imprimitive():
    spec = CharacterSpec.from_exponents([(3, 2)], omega_exps={3: 3})  # induced mod 3
    tables = precompute_tables(spec)
    assert not spec.is_primitive()
    with pytest.raises(ValueError):
        functional_equation_check(spec, tables, complex(0.5), 1e-8)
