from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from secrange.atoms import (AtomTable, compound, constant_table, random_table,
                            to_rational, validate, zero_table)

seeds = st.integers(0, 2 ** 32 - 1)


def test_compound_empty_sum():
    t = random_table(3, 0)
    assert compound(t, 3, 3, 1) == 0


def test_compound_two_terms():
    t = random_table(3, 1)
    assert compound(t, 1, 3, 1) == t[2, 1] + t[3, 1]


@pytest.mark.parametrize("args", [(-1, 2, 1), (2, 1, 1), (0, 4, 1), (0, 3, 0),
                                  (0, 3, 4)])
def test_compound_range(args):
    with pytest.raises(IndexError):
        compound(random_table(3, 0), *args)


def test_random_table_deterministic():
    assert random_table(3, 11, 9) == random_table(3, 11, 9)
    assert random_table(3, 11) != random_table(3, 12)


def test_random_table_k5():
    t = random_table(5, 7, 64)
    vals = [t[j, m] for j in range(1, 6) for m in range(1, 6)]
    assert len(vals) == 25
    assert all(isinstance(v, F) and v.denominator <= 64 for v in vals)
    assert all(0 <= v <= 2 for v in vals)
    for j in range(1, 6):
        assert all(t[j, m] <= t[j, m + 1] for m in range(1, 5))


def test_random_table_rejects_bad_args():
    with pytest.raises(ValueError):
        random_table(1, 0)
    with pytest.raises(ValueError):
        random_table(3, 0, 1)


def test_validate_zero_ok():
    assert validate(zero_table(4)) is None


def test_validate_monotonicity_violation():
    rows = [[0, 0, 0], [1, F(1, 2), 1], [0, 0, 0]]
    bad = validate(AtomTable.from_rows(rows))
    assert (bad.kind, bad.j, bad.m) == ("monotonicity", 2, 1)


def test_validate_negative():
    bad = validate(AtomTable.from_rows([[-1, 0], [0, 0]]))
    assert (bad.kind, bad.j, bad.m) == ("negative", 1, 1)


def test_validate_tolerance():
    t = AtomTable.from_rows([[1e-12, 0.0], [0.0, 0.0]], mode="float")
    assert validate(t) is not None
    assert validate(t, tol=1e-9) is None


def test_json_roundtrip():
    t = random_table(4, 3)
    data = t.to_json()
    assert data["atoms"]["1,1"] == str(t[1, 1])
    assert AtomTable.from_json(data) == t
    f = AtomTable.from_rows([[0.25, 0.5], [0.0, 1.0]], mode="float")
    assert AtomTable.from_json(f.to_json()) == f


def test_to_rational_grid():
    f = AtomTable.from_rows([[0.1, 0.3], [0.0, 1.0]], mode="float")
    r = to_rational(f)
    assert r.mode == "rational"
    assert r[1, 1] == F(round(0.1 * 2 ** 40), 2 ** 40)
    with pytest.raises(ValueError):
        to_rational(AtomTable.from_rows([[0.5, 0.4], [0, 0]], mode="float"))


def test_constant_table():
    t = constant_table(3, F(2, 3))
    assert all(t[j, m] == F(2, 3) for j in range(1, 4) for m in range(1, 4))


@given(seeds, st.integers(2, 6), st.data())
def test_compound_additive(seed, K, data):
    t = random_table(K, seed)
    l = data.draw(st.integers(0, K))
    j = data.draw(st.integers(l, K))
    k = data.draw(st.integers(j, K))
    m = data.draw(st.integers(1, K))
    assert compound(t, l, k, m) == compound(t, l, j, m) + compound(t, j, k, m)


@given(seeds, st.integers(2, 6), st.data())
def test_compound_monotone_in_receiver(seed, K, data):
    t = random_table(K, seed)
    l = data.draw(st.integers(0, K))
    k = data.draw(st.integers(l, K))
    m = data.draw(st.integers(1, K - 1))
    assert compound(t, l, k, m) <= compound(t, l, k, m + 1)


@given(seeds, st.integers(2, 7), st.integers(2, 100))
def test_random_tables_are_valid(seed, K, bound):
    assert validate(random_table(K, seed, bound)) is None
