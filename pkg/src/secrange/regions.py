"""Symbolic rate regions: linear inequalities over rate symbols whose
right-hand sides are rational combinations of atoms a[j, m].

Generators cover the capacity region, the split-rate region fed to the
elimination, the intermediate structure reached after each elimination step,
and the three-/four-receiver reference regions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

from .atoms import AtomTable
from .polytope import InstantiatedSystem

# ---------------------------------------------------------------------------
# Symbols and expressions
# ---------------------------------------------------------------------------

_NAME = re.compile(r"^R(\d+)(?:,(\d))?$")


@dataclass(frozen=True, order=True)
class RateSymbol:
    """R_k when ``part == 0``; otherwise the split component R_{k,part}."""

    k: int
    part: int = 0

    @property
    def is_split(self) -> bool:
        return self.part != 0

    @property
    def name(self) -> str:
        if not self.part:
            return f"R{self.k}"
        # "R32" for R_{3,2}; an explicit comma once k has two digits.
        return f"R{self.k}{self.part}" if self.k < 10 else \
            f"R{self.k},{self.part}"

    @classmethod
    def parse(cls, name: str) -> RateSymbol:
        m = _NAME.match(name)
        if not m:
            raise ValueError(f"bad rate symbol {name!r}")
        digits, part = m.group(1), m.group(2)
        if part is not None:
            return cls(int(digits), int(part))
        # Two digits read as a split when that is possible; total-rate
        # names are unambiguous for K <= 9.
        if len(digits) == 2 and digits[0] not in "01" and digits[1] in "123":
            return cls(int(digits[0]), int(digits[1]))
        return cls(int(digits))

    def __str__(self) -> str:
        return self.name


def total(k: int) -> RateSymbol:
    return RateSymbol(k)


def split(k: int, part: int) -> RateSymbol:
    return RateSymbol(k, part)


Atom = tuple[int, int]


@dataclass(frozen=True)
class RhsExpr:
    """sum of coeff * a[j, m] plus a constant."""

    coeffs: tuple[tuple[Atom, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def make(coeffs: Mapping[Atom, Fraction] | Iterable[tuple[Atom, Fraction]],
             const=0) -> RhsExpr:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[Atom, Fraction] = {}
        for key, v in items:
            acc[key] = acc.get(key, Fraction(0)) + Fraction(v)
        return RhsExpr(tuple(sorted((k, v) for k, v in acc.items() if v)),
                       Fraction(const))

    @staticmethod
    def atom(j: int, m: int) -> RhsExpr:
        return RhsExpr((((j, m), Fraction(1)),))

    def as_dict(self) -> dict[Atom, Fraction]:
        return dict(self.coeffs)

    def __add__(self, other: RhsExpr) -> RhsExpr:
        return RhsExpr.make(list(self.coeffs) + list(other.coeffs),
                            self.const + other.const)

    def __neg__(self) -> RhsExpr:
        return self.scale(-1)

    def __sub__(self, other: RhsExpr) -> RhsExpr:
        return self + (-other)

    def scale(self, t) -> RhsExpr:
        t = Fraction(t)
        if t == 0:
            return RhsExpr()
        return RhsExpr(tuple((k, v * t) for k, v in self.coeffs),
                       self.const * t)

    def atoms(self) -> set[Atom]:
        return {k for k, _ in self.coeffs}

    def evaluate(self, table: AtomTable):
        if table.mode == "rational":
            return self.const + sum((v * table[k] for k, v in self.coeffs),
                                    Fraction(0))
        return float(self.const) + sum(float(v) * table[k]
                                       for k, v in self.coeffs)

    def provably_nonneg(self) -> bool:
        """True iff the expression is >= 0 for every valid atom table.

        Each row of a valid table lies in the cone 0 <= a[j,1] <= ... <=
        a[j,K], generated by the suffix indicators, so nonnegativity holds
        exactly when every suffix sum of each row's coefficients is >= 0.
        """
        if self.const < 0:
            return False
        rows: dict[int, list[tuple[int, Fraction]]] = {}
        for (j, m), v in self.coeffs:
            rows.setdefault(j, []).append((m, v))
        for entries in rows.values():
            s = Fraction(0)
            for _, v in sorted(entries, reverse=True):
                s += v
                if s < 0:
                    return False
        return True

    def to_json(self) -> dict:
        return {"atoms": {f"{j},{m}": str(v) for (j, m), v in self.coeffs},
                "const": str(self.const)}

    @classmethod
    def from_json(cls, data: dict) -> RhsExpr:
        coeffs = {}
        for key, v in data.get("atoms", {}).items():
            j, m = (int(t) for t in key.split(","))
            coeffs[(j, m)] = Fraction(v)
        return cls.make(coeffs, Fraction(data.get("const", "0")))

    def __str__(self) -> str:
        parts = []
        for (j, m), v in self.coeffs:
            s = f"a{j}{m}" if v == 1 else f"-a{j}{m}" if v == -1 else \
                f"{v}*a{j}{m}"
            parts.append(s)
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


def diag_sum(lo: int, hi: int) -> RhsExpr:
    """sum_{i=lo}^{hi} a[i, i]; empty (zero) when lo > hi."""
    return RhsExpr.make({(i, i): 1 for i in range(lo, hi + 1)})


def compound_expr(l: int, k: int, m: int) -> RhsExpr:
    """Symbolic I(U_k; Y_m | U_l) = sum_{j=l+1}^{k} a[j, m]."""
    return RhsExpr.make({(j, m): 1 for j in range(l + 1, k + 1)})


# ---------------------------------------------------------------------------
# Inequalities and regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Inequality:
    """sum lhs[s] * s <= rhs, kept in canonical form."""

    lhs: tuple[tuple[RateSymbol, Fraction], ...]
    rhs: RhsExpr

    @staticmethod
    def make(lhs: Mapping[RateSymbol, Fraction] |
             Iterable[tuple[RateSymbol, Fraction]],
             rhs: RhsExpr) -> Inequality:
        items = lhs.items() if isinstance(lhs, Mapping) else lhs
        acc: dict[RateSymbol, Fraction] = {}
        for s, v in items:
            acc[s] = acc.get(s, Fraction(0)) + Fraction(v)
        terms = sorted((s, v) for s, v in acc.items() if v)
        if terms:
            # Scale so that lhs coefficients are coprime integers.
            den = lcm(*(v.denominator for _, v in terms))
            num = reduce(gcd, (abs(v.numerator) * (den // v.denominator)
                               for _, v in terms))
            t = Fraction(den, num)
            if t != 1:
                terms = [(s, v * t) for s, v in terms]
                rhs = rhs.scale(t)
        return Inequality(tuple(terms), rhs)

    def coeff(self, s: RateSymbol) -> Fraction:
        for sym, v in self.lhs:
            if sym == s:
                return v
        return Fraction(0)

    def symbols(self) -> set[RateSymbol]:
        return {s for s, _ in self.lhs}

    @property
    def is_trivial(self) -> bool:
        """Zero lhs with a right-hand side that can never go negative."""
        return not self.lhs and self.rhs.provably_nonneg()

    def to_json(self) -> dict:
        return {"lhs": {s.name: str(v) for s, v in self.lhs},
                "rhs": self.rhs.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> Inequality:
        lhs = {RateSymbol.parse(k): Fraction(v)
               for k, v in data["lhs"].items()}
        return cls.make(lhs, RhsExpr.from_json(data["rhs"]))

    def __str__(self) -> str:
        parts = []
        for s, v in self.lhs:
            c = "" if abs(v) == 1 else f"{abs(v)}*"
            parts.append(("- " if v < 0 else "+ ") + c + s.name)
        lhs = " ".join(parts).lstrip("+ ") if parts else "0"
        if lhs.startswith("- "):
            lhs = "-" + lhs[2:]
        return f"{lhs} <= {self.rhs}"


def leq(symbols: Iterable[RateSymbol] | Mapping[RateSymbol, Fraction],
        rhs: RhsExpr) -> Inequality:
    if isinstance(symbols, Mapping):
        return Inequality.make(symbols, rhs)
    return Inequality.make([(s, 1) for s in symbols], rhs)


def equality(lhs: Mapping[RateSymbol, Fraction]) -> list[Inequality]:
    """``lhs == 0`` as two opposed rows."""
    neg = {s: -v for s, v in lhs.items()}
    return [Inequality.make(lhs, RhsExpr()), Inequality.make(neg, RhsExpr())]


def nonneg_rows(variables: Iterable[RateSymbol]) -> list[Inequality]:
    return [Inequality.make({s: -1}, RhsExpr()) for s in variables]


@dataclass(frozen=True)
class Region:
    variables: tuple[RateSymbol, ...]
    inequalities: tuple[Inequality, ...]
    label: str = ""

    def __post_init__(self):
        known = set(self.variables)
        for ineq in self.inequalities:
            extra = ineq.symbols() - known
            if extra:
                raise ValueError(
                    f"symbols {sorted(s.name for s in extra)} not in variables")

    @staticmethod
    def make(variables: Sequence[RateSymbol], inequalities: Iterable[Inequality],
             label: str = "") -> Region:
        seen = set()
        rows = []
        for ineq in inequalities:
            if ineq not in seen:
                seen.add(ineq)
                rows.append(ineq)
        return Region(tuple(variables), tuple(rows), label)

    def __len__(self) -> int:
        return len(self.inequalities)

    def with_nonneg(self) -> Region:
        return Region.make(self.variables,
                           list(self.inequalities) + nonneg_rows(self.variables),
                           self.label)

    def atoms(self) -> set[Atom]:
        out = set()
        for ineq in self.inequalities:
            out |= ineq.rhs.atoms()
        return out

    def instantiate(self, table: AtomTable,
                    variables: Sequence[RateSymbol] | None = None
                    ) -> InstantiatedSystem:
        """Evaluate right-hand sides at ``table`` (exact-rational tables)."""
        if table.mode != "rational":
            raise ValueError("exact instantiation needs a rational table")
        order = tuple(variables) if variables is not None else self.variables
        pos = {s: i for i, s in enumerate(order)}
        rows, bounds = [], []
        for ineq in self.inequalities:
            row = [Fraction(0)] * len(order)
            for s, v in ineq.lhs:
                row[pos[s]] = v
            rows.append(tuple(row))
            bounds.append(ineq.rhs.evaluate(table))
        return InstantiatedSystem(tuple(s.name for s in order), tuple(rows),
                                  tuple(bounds))

    def float_matrices(self, table: AtomTable):
        """(A, b) as numpy float arrays for float LPs."""
        import numpy as np
        pos = {s: i for i, s in enumerate(self.variables)}
        A = np.zeros((len(self.inequalities), len(self.variables)))
        b = np.zeros(len(self.inequalities))
        for r, ineq in enumerate(self.inequalities):
            for s, v in ineq.lhs:
                A[r, pos[s]] = float(v)
            b[r] = float(ineq.rhs.evaluate(table))
        return A, b

    def to_json(self) -> dict:
        return {"label": self.label,
                "variables": [s.name for s in self.variables],
                "inequalities": [i.to_json() for i in self.inequalities]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict | str) -> Region:
        if isinstance(data, str):
            data = json.loads(data)
        variables = [RateSymbol.parse(v) for v in data["variables"]]
        rows = [Inequality.from_json(i) for i in data["inequalities"]]
        return cls.make(variables, rows, data.get("label", ""))

    def __str__(self) -> str:
        head = f"# {self.label}\n" if self.label else ""
        return head + "\n".join(str(i) for i in self.inequalities)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def totals(K: int) -> list[RateSymbol]:
    return [total(k) for k in range(1, K + 1)]


def split_symbols(K: int) -> list[RateSymbol]:
    """R_{2,2} and R_{k,1}, R_{k,2} for 3 <= k <= K."""
    out = [split(2, 2)]
    for k in range(3, K + 1):
        out += [split(k, 1), split(k, 2)]
    return out


def _span(lo: int, hi: int) -> list[RateSymbol]:
    return [total(i) for i in range(lo, hi + 1)]


def _secrecy_rhs(l: int, k: int) -> RhsExpr:
    # sum_{i=l-1}^{k} a[i,i] - I(U_k; Y_{l-2} | U_{l-2})
    return diag_sum(l - 1, k) - compound_expr(l - 2, k, l - 2)


def theorem1(K: int, nonneg: bool = False) -> Region:
    if K < 2:
        raise ValueError("theorem1 needs K >= 2")
    rows = [leq([total(1)], RhsExpr.atom(1, 1))]
    for k in range(2, K + 1):
        rows.append(leq(_span(2, k), diag_sum(2, k)))
    for l in range(3, K + 1):
        for k in range(l, K + 1):
            rows.append(leq(_span(l, k), _secrecy_rhs(l, k)))
    reg = Region.make(totals(K), rows, f"capacity region K={K}")
    return reg.with_nonneg() if nonneg else reg


def pre_elimination(K: int, nonneg: bool = False) -> Region:
    """Split-rate region with the rate-sharing identities as row pairs."""
    if K < 3:
        raise ValueError("pre_elimination needs K >= 3")
    rows = [leq([total(1)], RhsExpr.atom(1, 1)),
            leq([total(2), split(2, 2)], RhsExpr.atom(2, 2))]
    for k in range(3, K + 1):
        rows.append(leq([split(k, 1), split(k, 2)], RhsExpr.atom(k, k)))
    for l in range(3, K + 1):
        for j in range(l - 1, K):
            rows.append(leq(_span(l, j) + [split(j, 2)], _secrecy_rhs(l, j)))
    for l in range(3, K + 1):
        rows.append(leq(_span(l, K), _secrecy_rhs(l, K)))
    for k in range(3, K):
        rows += equality({total(k): 1, split(k - 1, 2): -1, split(k, 1): -1})
    rows += equality({total(K): 1, split(K - 1, 2): -1, split(K, 1): -1,
                      split(K, 2): -1})
    reg = Region.make(totals(K) + split_symbols(K), rows,
                      f"split-rate region K={K}")
    return reg.with_nonneg() if nonneg else reg


def inductive_structure(k: int, K: int, nonneg: bool = False) -> Region:
    """Region reached after eliminating (R_{k-1,2}, R_{k,1})."""
    if not 3 <= k <= K - 1:
        raise ValueError(f"structure index k={k} needs 3 <= k <= K-1 (K={K})")
    tail = split(k, 2)
    rows = [leq([total(1)], RhsExpr.atom(1, 1))]
    for j in range(2, k):
        rows.append(leq(_span(2, j), diag_sum(2, j)))
    rows.append(leq(_span(2, k) + [tail], diag_sum(2, k)))
    for l in range(3, k):
        for j in range(l, k):
            rows.append(leq(_span(l, j), _secrecy_rhs(l, j)))
    for l in range(3, k + 2):
        rows.append(leq(_span(l, k) + [tail], _secrecy_rhs(l, k)))
    reg = Region.make(totals(k) + [tail], rows,
                      f"structure after step {k} (K={K})")
    return reg.with_nonneg() if nonneg else reg


REFERENCE_KINDS = ("prop-k3", "prop-k4", "naive-k4")


def reference_region(kind: str, nonneg: bool = False) -> Region:
    R = total
    a = RhsExpr.atom
    if kind == "prop-k3":
        rows = [leq([R(1)], a(1, 1)),
                leq([R(2)], a(2, 2)),
                leq([R(3)], a(3, 3)),
                leq([R(3)], a(3, 3) + a(2, 2) - compound_expr(1, 3, 1))]
        reg = Region.make(totals(3), rows, "three-receiver region")
    elif kind in ("prop-k4", "naive-k4"):
        rows = [leq([R(1)], a(1, 1)),
                leq([R(2)], a(2, 2)),
                leq([R(3)], a(3, 3)),
                leq([R(3)], a(3, 3) + a(2, 2) - compound_expr(1, 3, 1))]
        if kind == "naive-k4":
            rows.append(leq([R(4)], a(4, 4)))
        rows.append(leq([R(4)], a(4, 4) + a(3, 3) - compound_expr(2, 4, 2)))
        if kind == "prop-k4":
            rows.append(leq([R(3), R(4)], a(3, 3) + a(4, 4)))
        rows.append(leq([R(3), R(4)],
                        a(3, 3) + a(4, 4) + a(2, 2) - compound_expr(1, 4, 1)))
        label = ("four-receiver region with rate sharing" if kind == "prop-k4"
                 else "four-receiver region without rate sharing")
        reg = Region.make(totals(4), rows, label)
    else:
        raise ValueError(f"unknown reference region {kind!r}")
    return reg.with_nonneg() if nonneg else reg


def region_K(kind: str) -> int:
    return {"prop-k3": 3, "prop-k4": 4, "naive-k4": 4}[kind]
