"""Elementary mutual-information atoms a[j, m] = I(U_j; Y_m | U_{j-1}).

U_0 is a constant and U_K = X.  Under the chain U_1 -> ... -> U_K -> Y_K ->
... -> Y_1 every conditional information between an auxiliary and an output
decomposes into a sum of atoms, see :func:`compound`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

Scalar = Union[Fraction, float]

# Channel-derived atoms are snapped to this grid before exact work.
RATIONAL_GRID = 2 ** 40


@dataclass(frozen=True)
class AtomTable:
    """K x K atoms; ``values[j-1][m-1]`` holds a[j, m]."""

    K: int
    values: tuple[tuple[Scalar, ...], ...]
    mode: str = "rational"

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.mode not in ("rational", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.values) != self.K or any(len(r) != self.K
                                             for r in self.values):
            raise ValueError("atom table must be K x K")

    def __getitem__(self, jm: tuple[int, int]) -> Scalar:
        j, m = jm
        if not (1 <= j <= self.K and 1 <= m <= self.K):
            raise IndexError(f"atom index {(j, m)} outside 1..{self.K}")
        return self.values[j - 1][m - 1]

    @classmethod
    def from_rows(cls, rows, mode: str = "rational") -> AtomTable:
        conv = Fraction if mode == "rational" else float
        vals = tuple(tuple(conv(v) for v in r) for r in rows)
        return cls(len(vals), vals, mode)

    def to_json(self) -> dict:
        enc = str if self.mode == "rational" else float
        return {
            "K": self.K,
            "mode": self.mode,
            "atoms": {f"{j},{m}": enc(self[j, m])
                      for j in range(1, self.K + 1)
                      for m in range(1, self.K + 1)},
        }

    @classmethod
    def from_json(cls, data: dict | str) -> AtomTable:
        if isinstance(data, str):
            data = json.loads(data)
        K = int(data["K"])
        mode = data.get("mode", "rational")
        conv = Fraction if mode == "rational" else float
        rows = [[conv(0)] * K for _ in range(K)]
        for key, v in data["atoms"].items():
            j, m = (int(t) for t in key.split(","))
            rows[j - 1][m - 1] = conv(v)
        return cls.from_rows(rows, mode)


def zero_table(K: int) -> AtomTable:
    return AtomTable.from_rows([[0] * K for _ in range(K)])


def constant_table(K: int, c) -> AtomTable:
    return AtomTable.from_rows([[c] * K for _ in range(K)])


def compound(table: AtomTable, l: int, k: int, m: int) -> Scalar:
    """I(U_k; Y_m | U_l) as the sum of a[j, m] for l < j <= k."""
    K = table.K
    if not (0 <= l <= k <= K) or not (1 <= m <= K):
        raise IndexError(f"compound({l}, {k}, {m}) out of range for K={K}")
    zero = Fraction(0) if table.mode == "rational" else 0.0
    return sum((table[j, m] for j in range(l + 1, k + 1)), zero)


def random_table(K: int, seed: int, denominator_bound: int = 64) -> AtomTable:
    """Exact-rational table with entries in [0, 2], rows sorted in m."""
    if K < 2 or denominator_bound < 2:
        raise ValueError("need K >= 2 and denominator_bound >= 2")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(K):
        q = rng.integers(1, denominator_bound + 1, size=K)
        p = [int(rng.integers(0, 2 * int(qi) + 1)) for qi in q]
        rows.append(sorted(Fraction(pi, int(qi)) for pi, qi in zip(p, q)))
    return AtomTable.from_rows(rows)


@dataclass(frozen=True)
class Violation:
    kind: str  # "negative" | "monotonicity"
    j: int
    m: int
    detail: str


def validate(table: AtomTable, tol: float = 0.0) -> Violation | None:
    """First violated invariant, or None when the table is valid."""
    K = table.K
    for j in range(1, K + 1):
        for m in range(1, K + 1):
            if table[j, m] < -tol:
                return Violation("negative", j, m,
                                 f"a[{j},{m}] = {table[j, m]} < 0")
        for m in range(1, K):
            if table[j, m] - table[j, m + 1] > tol:
                return Violation(
                    "monotonicity", j, m,
                    f"a[{j},{m}] = {table[j, m]} > a[{j},{m + 1}] = "
                    f"{table[j, m + 1]}")
    return None


def to_rational(table: AtomTable, grid: int = RATIONAL_GRID) -> AtomTable:
    """Round a float table onto the 1/grid lattice and re-validate exactly."""
    if table.mode == "rational":
        return table
    rows = [[Fraction(round(float(v) * grid), grid) for v in r]
            for r in table.values]
    out = AtomTable.from_rows(rows)
    bad = validate(out)
    if bad is not None:
        raise ValueError(f"rounding broke the atom invariants: {bad.detail}")
    return out
