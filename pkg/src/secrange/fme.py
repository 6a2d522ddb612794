"""Exact Fourier-Motzkin elimination over symbolic regions, plus the
pairwise schedule that walks the split-rate region down to the capacity
region one receiver at a time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .atoms import AtomTable, validate
from .polytope import equal, point_to_json, redundant_rows
from .regions import (Inequality, RateSymbol, Region, inductive_structure,
                      pre_elimination, split, theorem1)


@dataclass(frozen=True)
class EliminationSchedule:
    groups: tuple[tuple[RateSymbol, ...], ...]

    def __post_init__(self):
        seen: set[RateSymbol] = set()
        for g in self.groups:
            if seen & set(g):
                raise ValueError("schedule groups overlap")
            seen |= set(g)

    @classmethod
    def inductive(cls, K: int) -> EliminationSchedule:
        """(R_{k-1,2}, R_{k,1}) for 3 <= k <= K-1, then
        (R_{K-1,2}, R_{K,1}, R_{K,2})."""
        if K < 3:
            raise ValueError("schedule needs K >= 3")
        groups = [(split(k - 1, 2), split(k, 1)) for k in range(3, K)]
        groups.append((split(K - 1, 2), split(K, 1), split(K, 2)))
        return cls(tuple(groups))

    def symbols(self) -> list[RateSymbol]:
        return [s for g in self.groups for s in g]


# ---------------------------------------------------------------------------
# Single-variable elimination
# ---------------------------------------------------------------------------

def _combine(p: Inequality, n: Inequality, var: RateSymbol) -> Inequality:
    a, b = p.coeff(var), -n.coeff(var)
    lhs: dict[RateSymbol, Fraction] = {}
    for s, v in p.lhs:
        lhs[s] = lhs.get(s, Fraction(0)) + b * v
    for s, v in n.lhs:
        lhs[s] = lhs.get(s, Fraction(0)) + a * v
    lhs.pop(var, None)
    return Inequality.make(lhs, p.rhs.scale(b) + n.rhs.scale(a))


def syntactic_prune(rows: Iterable[Inequality]) -> list[Inequality]:
    """Drop duplicates, trivially true rows, and rows whose bound is
    provably looser than another row with the same left-hand side."""
    by_lhs: dict[tuple, list[Inequality]] = {}
    order: list[tuple] = []
    for r in rows:
        if r.is_trivial:
            continue
        bucket = by_lhs.setdefault(r.lhs, [])
        if not bucket:
            order.append(r.lhs)
        if r not in bucket:
            bucket.append(r)
    out = []
    for key in order:
        bucket = by_lhs[key]
        keep = []
        for i, r in enumerate(bucket):
            dominated = False
            for j, o in enumerate(bucket):
                if i == j:
                    continue
                gap = r.rhs - o.rhs  # r looser when gap >= 0 on every table
                if gap.provably_nonneg():
                    # Mutually dominating rows are equal; keep the first.
                    if not (o.rhs - r.rhs).provably_nonneg() or j < i:
                        dominated = True
                        break
            if not dominated:
                keep.append(r)
        out.extend(keep)
    return out


def eliminate(region: Region, var: RateSymbol) -> Region:
    if var not in region.variables:
        raise KeyError(f"{var.name} is not a variable of the region")
    pos, neg, rest = [], [], []
    for r in region.inequalities:
        c = r.coeff(var)
        (pos if c > 0 else neg if c < 0 else rest).append(r)
    rows = rest + [_combine(p, n, var) for p in pos for n in neg]
    variables = [s for s in region.variables if s != var]
    return Region.make(variables, syntactic_prune(rows), region.label)


# ---------------------------------------------------------------------------
# Scheduled projection
# ---------------------------------------------------------------------------

def lp_prune(region: Region, table: AtomTable) -> Region:
    """Remove rows implied by the others at this instantiation."""
    system = region.instantiate(table)
    drop = set(redundant_rows(system))
    rows = [r for i, r in enumerate(region.inequalities) if i not in drop]
    return Region(region.variables, tuple(rows), region.label)


def project_steps(region: Region, schedule: EliminationSchedule,
                  table: AtomTable | None = None,
                  prune: str = "syntactic") -> Iterator[Region]:
    """Yield the region after each schedule group."""
    if prune not in ("syntactic", "lp"):
        raise ValueError(f"unknown prune mode {prune!r}")
    if prune == "lp" and table is None:
        raise ValueError("LP pruning needs an atom table")
    missing = set(schedule.symbols()) - set(region.variables)
    if missing:
        raise KeyError(f"schedule symbols not in region: "
                       f"{sorted(s.name for s in missing)}")
    cur = region
    for group in schedule.groups:
        for var in group:
            cur = eliminate(cur, var)
        if prune == "lp":
            cur = lp_prune(cur, table)
        yield cur


def project(region: Region, schedule: EliminationSchedule,
            table: AtomTable | None = None,
            prune: str = "syntactic") -> Region:
    cur = region
    for cur in project_steps(region, schedule, table, prune):
        pass
    return cur


# ---------------------------------------------------------------------------
# Verification against the closed forms
# ---------------------------------------------------------------------------

def expected_intermediate(k: int, K: int, nonneg: bool = False) -> Region:
    """What the region should look like after the group ending in R_{k,1}:
    the structure rows over R_1..R_k, R_{k,2}, together with every original
    row that mentions a variable the elimination has not reached yet."""
    struct = inductive_structure(k, K, nonneg)
    pre = pre_elimination(K, nonneg)
    eliminated = set(EliminationSchedule.inductive(K).groups[0])
    for g in EliminationSchedule.inductive(K).groups[1:k - 2]:
        eliminated |= set(g)
    inside = set(struct.variables)
    keep = [r for r in pre.inequalities
            if not (r.symbols() & eliminated) and r.symbols() - inside]
    variables = [s for s in pre.variables if s not in eliminated]
    return Region.make(variables, list(struct.inequalities) + keep,
                       struct.label)


@dataclass
class StepReport:
    step: int
    intermediate_label: str
    equal: bool
    witness: dict | None
    rows_before: int
    rows_after: int
    direction: str | None = None

    def to_json(self) -> dict:
        return {"step": self.step, "intermediate_label": self.intermediate_label,
                "equal": self.equal, "witness": self.witness,
                "direction": self.direction,
                "rows_before": self.rows_before, "rows_after": self.rows_after}


@dataclass
class VerifyReport:
    K: int
    with_nonneg: bool
    steps: list[StepReport] = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(s.equal for s in self.steps)

    @property
    def final(self) -> StepReport | None:
        return self.steps[-1] if self.steps else None

    def to_json(self) -> dict:
        return {"K": self.K, "with_nonneg": self.with_nonneg,
                "passed": self.passed, "error": self.error,
                "steps": [s.to_json() for s in self.steps]}


def _compare(got: Region, want: Region, table: AtomTable,
             step: int, label: str, before: int) -> StepReport:
    order = got.variables
    if set(order) != set(want.variables):
        raise ValueError("compared regions have different variables")
    cmp = equal(got.instantiate(table, order), want.instantiate(table, order))
    witness = point_to_json(cmp.witness, [s.name for s in order])
    return StepReport(step, label, cmp.holds, witness, before, len(got),
                      cmp.direction)


def inductive_verify(K: int, table: AtomTable, with_nonneg: bool = False,
                     prune: str = "lp",
                     check_intermediate: bool = True) -> VerifyReport:
    """Run the scheduled projection and compare every stage with its closed
    form.  Step k (3 <= k <= K-1) is the group ending in R_{k,1}; the last
    step is the final group and is compared with the capacity region."""
    report = VerifyReport(K, with_nonneg)
    bad = validate(table)
    if bad is not None or table.K != K or table.mode != "rational":
        report.error = bad.detail if bad else "table must be rational of size K"
        return report
    t0 = time.perf_counter()
    region = pre_elimination(K, with_nonneg)
    schedule = EliminationSchedule.inductive(K)
    before = len(region)
    for idx, cur in enumerate(project_steps(region, schedule, table, prune)):
        k = idx + 3
        if k <= K - 1:
            if check_intermediate:
                want = expected_intermediate(k, K, with_nonneg)
                report.steps.append(_compare(cur, want, table, k, want.label,
                                             before))
        else:
            want = theorem1(K, with_nonneg)
            report.steps.append(_compare(cur, want, table, k, want.label,
                                         before))
        before = len(cur)
    report.seconds = time.perf_counter() - t0
    return report
