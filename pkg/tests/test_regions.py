from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from secrange.atoms import constant_table, random_table, zero_table
from secrange.polytope import find_point, implies
from secrange.regions import (Inequality, RateSymbol, Region, RhsExpr,
                              inductive_structure, leq, pre_elimination,
                              reference_region, split, theorem1, total)

R = total
a = RhsExpr.atom


def rows_of(region):
    return set(region.inequalities)


def test_symbol_names():
    assert R(3).name == "R3"
    assert split(3, 2).name == "R32"
    for s in (R(1), R(9), R(12), split(2, 2), split(9, 1), split(11, 3)):
        assert RateSymbol.parse(s.name) == s
    with pytest.raises(ValueError):
        RateSymbol.parse("X1")


def test_inequality_canonical_form():
    i = Inequality.make({R(2): F(2), R(1): F(4, 3)}, a(1, 1).scale(2))
    assert [s for s, _ in i.lhs] == [R(1), R(2)]
    assert [v for _, v in i.lhs] == [2, 3]
    assert i.rhs == a(1, 1).scale(3)
    assert Inequality.make({R(1): 2}, a(1, 1)) == \
        Inequality.make({R(1): 1}, a(1, 1).scale(F(1, 2)))


def test_region_rejects_unknown_symbol():
    with pytest.raises(ValueError):
        Region.make([R(1)], [leq([R(2)], a(1, 1))])


def test_region_drops_duplicates():
    reg = Region.make([R(1)], [leq([R(1)], a(1, 1))] * 3)
    assert len(reg) == 1


def test_theorem1_k3():
    want = {leq([R(1)], a(1, 1)),
            leq([R(2)], a(2, 2)),
            leq([R(2), R(3)], a(2, 2) + a(3, 3)),
            leq([R(3)], a(2, 2) + a(3, 3) - a(2, 1) - a(3, 1))}
    assert rows_of(theorem1(3)) == want
    assert len(theorem1(3)) == 4


def test_theorem1_all_equal_collapses_r3():
    c = F(5, 7)
    reg = theorem1(3)
    row = leq([R(3)], a(2, 2) + a(3, 3) - a(2, 1) - a(3, 1))
    assert row in rows_of(reg)
    assert row.rhs.evaluate(constant_table(3, c)) == 0


def _count_theorem1(K):
    n = 1 + (K - 1)
    for l in range(3, K + 1):
        for k in range(l, K + 1):
            n += 1
    return n


@pytest.mark.parametrize("K", range(2, 9))
def test_theorem1_counts(K):
    assert len(theorem1(K)) == _count_theorem1(K) == K + (K - 1) * (K - 2) // 2


def test_theorem1_k6_has_16_rows():
    assert len(theorem1(6)) == 16


@pytest.mark.parametrize("K", range(3, 9))
def test_pre_elimination_counts(K):
    secrecy = sum(1 for l in range(3, K + 1) for j in range(l - 1, K))
    expected = 2 + (K - 2) + secrecy + (K - 2) + 2 * (K - 2)
    assert len(pre_elimination(K)) == expected
    assert len(pre_elimination(K).variables) == K + 1 + 2 * (K - 2)


def test_pre_elimination_k3():
    reg = pre_elimination(3)
    assert [s.name for s in reg.variables] == \
        ["R1", "R2", "R3", "R22", "R31", "R32"]
    # five inequalities plus the rate-sharing identity as two rows
    assert len(reg) == 7


def test_pre_elimination_k5_variables():
    reg = pre_elimination(5)
    assert sum(not s.is_split for s in reg.variables) == 5
    assert sum(s.is_split for s in reg.variables) == 7


def test_pre_elimination_k4_contains_first_step_system():
    """The seven-line system that starts the elimination: receivers 1..3
    of a four-receiver split-rate region."""
    reg = pre_elimination(4)
    inside = {R(1), R(2), R(3), split(2, 2), split(3, 1), split(3, 2)}
    sub = {r for r in reg.inequalities if r.symbols() <= inside}
    comp = a(2, 1) + a(3, 1)
    want = {leq([R(1)], a(1, 1)),
            leq([R(2), split(2, 2)], a(2, 2)),
            leq([split(3, 1), split(3, 2)], a(3, 3)),
            leq([split(2, 2)], a(2, 2) - a(2, 1)),
            leq([R(3), split(3, 2)], a(2, 2) + a(3, 3) - comp),
            leq([split(3, 2)], a(3, 3) - a(3, 2)),
            leq({R(3): 1, split(2, 2): -1, split(3, 1): -1}, RhsExpr()),
            leq({R(3): -1, split(2, 2): 1, split(3, 1): 1}, RhsExpr())}
    assert sub == want


def test_pre_elimination_zero_table_origin():
    sys_ = pre_elimination(3, nonneg=True).instantiate(zero_table(3))
    for i in range(sys_.dim):
        e = [0] * sys_.dim
        e[i] = 1
        assert implies(sys_, e, 0).holds
    assert find_point(sys_) == (0,) * sys_.dim


def test_structure_k3():
    s = inductive_structure(3, 4)
    want = {leq([R(1)], a(1, 1)),
            leq([R(2)], a(2, 2)),
            leq([R(2), R(3), split(3, 2)], a(2, 2) + a(3, 3)),
            leq([R(3), split(3, 2)], a(2, 2) + a(3, 3) - a(2, 1) - a(3, 1)),
            leq([split(3, 2)], a(3, 3) - a(3, 2))}
    assert rows_of(s) == want


def test_structure_k4():
    s = inductive_structure(4, 5)
    t = split(4, 2)
    d = lambda lo, hi: sum((a(i, i) for i in range(lo + 1, hi + 1)), a(lo, lo))
    comp4 = lambda m: sum((a(j, m) for j in range(m + 1, 5)), RhsExpr())
    want = {leq([R(1)], a(1, 1)),
            leq([R(2)], d(2, 2)),
            leq([R(2), R(3)], d(2, 3)),
            leq([R(2), R(3), R(4), t], d(2, 4)),
            leq([R(3)], d(2, 3) - a(2, 1) - a(3, 1)),
            leq([R(3), R(4), t], d(2, 4) - comp4(1)),
            leq([R(4), t], d(3, 4) - comp4(2)),
            leq([t], d(4, 4) - comp4(3))}
    assert rows_of(s) == want


def test_structure_tail_row_k4():
    s = inductive_structure(4, 6)
    assert leq([split(4, 2)], a(4, 4) - a(4, 3)) in rows_of(s)


@pytest.mark.parametrize("k,K", [(2, 4), (4, 4), (5, 4)])
def test_structure_range(k, K):
    with pytest.raises(ValueError):
        inductive_structure(k, K)


def test_prop_k3():
    want = {leq([R(1)], a(1, 1)), leq([R(2)], a(2, 2)), leq([R(3)], a(3, 3)),
            leq([R(3)], a(3, 3) + a(2, 2) - a(2, 1) - a(3, 1))}
    assert rows_of(reference_region("prop-k3")) == want


def test_naive_k4():
    reg = reference_region("naive-k4")
    assert len(reg) == 7
    assert leq([R(4)], a(4, 4)) in rows_of(reg)


def test_prop_k4_all_equal():
    """All atoms equal to c: the R4 bound is 0 and R3 + R4 <= 2c."""
    c = F(3, 4)
    t = constant_table(4, c)
    reg = reference_region("prop-k4")
    assert leq([R(4)], a(4, 4)) not in rows_of(reg)
    vals = {tuple(s.name for s, _ in r.lhs): r.rhs.evaluate(t)
            for r in reg.inequalities if r.symbols() & {R(4)}}
    assert vals[("R4",)] == 0
    assert min(v for k, v in vals.items() if k == ("R3", "R4")) == 0
    both = [r.rhs.evaluate(t) for r in reg.inequalities
            if r.symbols() == {R(3), R(4)}]
    assert sorted(both) == [0, 2 * c]


def test_unknown_reference():
    with pytest.raises(ValueError):
        reference_region("prop-k5")


@pytest.mark.parametrize("K", range(3, 9))
def test_atoms_within_table_range(K):
    for reg in [theorem1(K), pre_elimination(K)] + \
            [inductive_structure(k, K) for k in range(3, K)]:
        assert all(1 <= j <= K and 1 <= m <= K for j, m in reg.atoms())
        t = random_table(K, K)
        for r in reg.inequalities:
            r.rhs.evaluate(t)


@pytest.mark.parametrize("K", range(3, 7))
def test_theorem1_zero_table_is_origin(K):
    sys_ = theorem1(K, nonneg=True).instantiate(zero_table(K))
    for i in range(K):
        e = [0] * K
        e[i] = 1
        assert implies(sys_, e, 0).holds


@pytest.mark.parametrize("K", range(3, 8))
def test_generated_rhs_nonnegative(K):
    # Every generated bound is a valid-table-nonnegative atom combination.
    for reg in [theorem1(K), pre_elimination(K)]:
        assert all(r.rhs.provably_nonneg() for r in reg.inequalities)


def test_region_json_roundtrip():
    for reg in (theorem1(4), pre_elimination(4, nonneg=True),
                inductive_structure(3, 5), reference_region("prop-k4")):
        back = Region.from_json(reg.dumps())
        assert back == reg


def test_region_json_shape():
    data = theorem1(3).to_json()
    assert data["variables"] == ["R1", "R2", "R3"]
    assert data["inequalities"][0] == {
        "lhs": {"R1": "1"}, "rhs": {"atoms": {"1,1": "1"}, "const": "0"}}


coef = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@given(st.dictionaries(st.tuples(st.integers(1, 3), st.integers(1, 3)), coef,
                       max_size=5), coef)
def test_provably_nonneg_matches_lp(coeffs, const):
    """The linear part is >= 0 on the monotone cone iff it is >= 0 on the
    box-truncated cone 0 <= a[j,1] <= ... <= a[j,3] <= 1 (LP minimum)."""
    e = RhsExpr.make(coeffs, const)
    idx = [(j, m) for j in range(1, 4) for m in range(1, 4)]
    c = np.array([float(e.as_dict().get(k, 0)) for k in idx])
    A, b = [], []
    for j in range(1, 4):
        for m in range(1, 3):
            row = np.zeros(9)
            row[idx.index((j, m))] = 1
            row[idx.index((j, m + 1))] = -1
            A.append(row)
            b.append(0)
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 1)] * 9, method="highs")
    lp_nonneg = res.fun >= -1e-9 and e.const >= 0
    assert e.provably_nonneg() == lp_nonneg
