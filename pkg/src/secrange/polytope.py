"""Exact rational LP backend for H-polytopes ``{x : A x <= b}``.

Implication is decided through the Farkas dual

    min  b . lam   s.t.  A^T lam = c,  lam >= 0

solved with an integer-preserving (Bareiss) two-phase simplex under Bland's
rule.  The dual values of the final tableau give either a violating point
(primal optimum) or a recession ray, so every ``no`` comes with an exact
witness and every ``yes`` with re-checkable multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Row = tuple[Fraction, ...]


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class InstantiatedSystem:
    """Rows ``coeffs . x <= bound`` over a fixed variable list."""

    variables: tuple[str, ...]
    rows: tuple[Row, ...]
    bounds: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.rows) != len(self.bounds):
            raise ValueError("rows and bounds differ in length")
        n = len(self.variables)
        for r in self.rows:
            if len(r) != n:
                raise ValueError("row width does not match variable count")

    @classmethod
    def build(cls, variables: Sequence[str], rows: Iterable[Sequence],
              bounds: Iterable) -> InstantiatedSystem:
        return cls(tuple(variables),
                   tuple(tuple(_frac(a) for a in r) for r in rows),
                   tuple(_frac(b) for b in bounds))

    @property
    def dim(self) -> int:
        return len(self.variables)

    def __len__(self) -> int:
        return len(self.rows)

    def slack(self, point: Sequence[Fraction]) -> list[Fraction]:
        return [b - sum(a * x for a, x in zip(r, point))
                for r, b in zip(self.rows, self.bounds)]

    def satisfies(self, point: Sequence[Fraction]) -> bool:
        return all(s >= 0 for s in self.slack(point))

    def without(self, index: int) -> InstantiatedSystem:
        return InstantiatedSystem(
            self.variables,
            self.rows[:index] + self.rows[index + 1:],
            self.bounds[:index] + self.bounds[index + 1:])

    def subset(self, indices: Iterable[int]) -> InstantiatedSystem:
        idx = list(indices)
        return InstantiatedSystem(self.variables,
                                  tuple(self.rows[i] for i in idx),
                                  tuple(self.bounds[i] for i in idx))


@dataclass(frozen=True)
class FarkasCertificate:
    """Nonnegative multipliers with ``lam^T A = c`` and ``lam^T b <= d``."""

    multipliers: dict[int, Fraction]

    def verify(self, system: InstantiatedSystem, target: Sequence,
               bound) -> bool:
        c = [_frac(v) for v in target]
        d = _frac(bound)
        if any(v < 0 for v in self.multipliers.values()):
            return False
        combo = [Fraction(0)] * system.dim
        rhs = Fraction(0)
        for i, lam in self.multipliers.items():
            for k, a in enumerate(system.rows[i]):
                combo[k] += lam * a
            rhs += lam * system.bounds[i]
        return combo == c and rhs <= d

    def to_json(self) -> dict:
        return {str(i): str(v) for i, v in sorted(self.multipliers.items())}


@dataclass(frozen=True)
class Implication:
    holds: bool
    certificate: FarkasCertificate | None = None
    witness: tuple[Fraction, ...] | None = None
    # The system itself is empty; ``holds`` is then vacuously true.
    vacuous: bool = False


@dataclass(frozen=True)
class Comparison:
    """Outcome of a containment or equality query.

    On failure ``witness`` lies in the smaller system and violates row
    ``row`` of the system named by ``direction``.
    """

    holds: bool
    witness: tuple[Fraction, ...] | None = None
    direction: str | None = None
    row: int | None = None
    certificates: list[FarkasCertificate] = field(default_factory=list,
                                                  repr=False)


class LPError(RuntimeError):
    pass


@dataclass
class _LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "threshold"
    lam: dict[int, Fraction] | None = None
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None
    ray: tuple[Fraction, ...] | None = None


def _solve_farkas(rows: Sequence[Row], bounds: Sequence[Fraction],
                  target: Sequence[Fraction],
                  threshold: Fraction | None = None) -> _LPResult:
    """min b.lam  s.t. sum_j lam_j rows[j] = target, lam >= 0.

    With ``threshold`` set, phase 2 stops as soon as the objective is at or
    below it (status "threshold"); the multipliers are then already enough
    for a certificate.
    """
    m = len(rows)
    n = len(target)
    width = m + n + 1
    rhs = width - 1

    # Integer-scaled constraint rows: sigma_i * (A^T)_i lam = sigma_i c_i.
    T: list[list[int]] = []
    sigma: list[Fraction] = []
    for i in range(n):
        coeffs = [rows[j][i] for j in range(m)] + [target[i]]
        scale = lcm(*(q.denominator for q in coeffs)) if coeffs else 1
        if target[i] < 0:
            scale = -scale
        sigma.append(Fraction(scale))
        line = [int(q * scale) for q in coeffs[:m]] + [0] * n \
            + [int(coeffs[m] * scale)]
        line[m + i] = 1
        T.append(line)

    cost_scale = lcm(*(b.denominator for b in bounds)) if m else 1
    phase1 = [0] * width
    for j in list(range(m)) + [rhs]:
        phase1[j] = -sum(T[i][j] for i in range(n))
    phase2 = [int(b * cost_scale) for b in bounds] + [0] * (n + 1)
    T.append(phase1)
    T.append(phase2)
    p1, p2 = n, n + 1

    basis = [m + i for i in range(n)]
    D = 1

    def pivot(r: int, k: int) -> None:
        nonlocal D
        p = T[r][k]
        pr = T[r]
        for i, line in enumerate(T):
            if i == r:
                continue
            f = line[k]
            if f:
                T[i] = [(p * a - f * b) // D for a, b in zip(line, pr)]
            elif p != D:
                T[i] = [(p * a) // D for a in line]
        D = p
        basis[r] = k

    def leaving(k: int) -> int | None:
        best = None
        for i in range(n):
            a = T[i][k]
            if a <= 0:
                continue
            if best is None:
                best = i
                continue
            # compare T[i][rhs]/a with T[best][rhs]/T[best][k]
            lhs = T[i][rhs] * T[best][k]
            rhs_ = T[best][rhs] * a
            if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[best]):
                best = i
        return best

    # Phase 1.
    while True:
        k = next((j for j in range(m) if T[p1][j] < 0), None)
        if k is None:
            break
        r = leaving(k)
        if r is None:  # cannot happen: phase 1 is bounded below by 0
            raise LPError("phase 1 unbounded")
        pivot(r, k)

    if T[p1][rhs] != 0:
        # Optimal phase-1 value is positive: target is outside the cone of
        # the rows.  Phase-1 duals give a ray r with A r <= 0, c.r > 0.
        ray = tuple(sigma[i] * (1 - Fraction(T[p1][m + i], D))
                    for i in range(n))
        return _LPResult("infeasible", ray=ray)

    # Drive zero-level artificials out of the basis where possible.
    for r in range(n):
        if basis[r] < m:
            continue
        k = next((j for j in range(m) if T[r][j] != 0), None)
        if k is None:
            continue
        if T[r][k] < 0:
            a = basis[r]
            T[r] = [-v if j != a else v for j, v in enumerate(T[r])]
            sigma[r] = -sigma[r]
        pivot(r, k)

    def objective() -> Fraction:
        return Fraction(-T[p2][rhs], D * cost_scale)

    def multipliers() -> dict[int, Fraction]:
        out = {}
        for i, j in enumerate(basis):
            if j < m and T[i][rhs] != 0:
                out[j] = Fraction(T[i][rhs], D)
        return out

    basic = set()
    while True:
        if threshold is not None and objective() <= threshold:
            return _LPResult("threshold", lam=multipliers(), value=objective())
        basic = set(basis)
        k = next((j for j in range(m) if j not in basic and T[p2][j] < 0),
                 None)
        if k is None:
            break
        r = leaving(k)
        if r is None:
            return _LPResult("unbounded")
        pivot(r, k)

    point = tuple(sigma[i] * Fraction(-T[p2][m + i], D * cost_scale)
                  for i in range(n))
    return _LPResult("optimal", lam=multipliers(), value=objective(),
                     point=point)


def _proportional(row: Row, target: Row) -> Fraction | None:
    """Return t > 0 with row == t * target, else None."""
    t = None
    for a, c in zip(row, target):
        if c == 0:
            if a != 0:
                return None
            continue
        q = a / c
        if q <= 0 or (t is not None and q != t):
            return None
        t = q
    return t


def find_point(system: InstantiatedSystem) -> tuple[Fraction, ...] | None:
    """An exact feasible point, or None when the system is empty."""
    zero = (Fraction(0),) * system.dim
    if system.satisfies(zero):
        return zero
    res = _solve_farkas(system.rows, system.bounds, zero)
    if res.status == "unbounded":
        return None
    assert res.status == "optimal"
    assert system.satisfies(res.point)
    return res.point


def is_feasible(system: InstantiatedSystem) -> bool:
    return find_point(system) is not None


def implies(system: InstantiatedSystem, target: Sequence,
            bound) -> Implication:
    """Decide whether ``target . x <= bound`` holds on all of ``system``."""
    c = tuple(_frac(v) for v in target)
    d = _frac(bound)
    if len(c) != system.dim:
        raise ValueError("target width does not match system")

    if all(v == 0 for v in c):
        if d >= 0:
            return Implication(True, FarkasCertificate({}),
                               vacuous=not is_feasible(system))
        x0 = find_point(system)
        if x0 is None:
            return Implication(True, vacuous=True)
        return Implication(False, witness=x0)

    for j, row in enumerate(system.rows):
        t = _proportional(row, c)
        if t is not None and system.bounds[j] / t <= d:
            cert = FarkasCertificate({j: 1 / t})
            return Implication(True, cert, vacuous=not is_feasible(system))

    res = _solve_farkas(system.rows, system.bounds, c, threshold=d)
    if res.status in ("threshold", "optimal") and res.value <= d:
        cert = FarkasCertificate(res.lam)
        if not cert.verify(system, c, d):
            raise LPError("certificate failed exact re-check")
        return Implication(True, cert, vacuous=not is_feasible(system))
    if res.status == "unbounded":
        return Implication(True, vacuous=True)
    if res.status == "optimal":
        x = res.point
    else:
        ray = res.ray
        if any(sum(a * r for a, r in zip(row, ray)) > 0
               for row in system.rows) or \
                sum(a * r for a, r in zip(c, ray)) <= 0:
            raise LPError("phase-1 ray failed exact re-check")
        x0 = find_point(system)
        if x0 is None:
            return Implication(True, vacuous=True)
        gain = sum(a * r for a, r in zip(c, ray))
        t = max(Fraction(0), (d - sum(a * v for a, v in zip(c, x0))) / gain) + 1
        x = tuple(v + t * r for v, r in zip(x0, ray))
    if not system.satisfies(x) or sum(a * v for a, v in zip(c, x)) <= d:
        raise LPError("witness failed exact re-check")
    return Implication(False, witness=x)


def contains(outer: InstantiatedSystem, inner: InstantiatedSystem) -> Comparison:
    """``outer`` contains ``inner`` iff every row of ``outer`` holds on
    ``inner``."""
    if outer.variables != inner.variables:
        raise ValueError("variable lists differ")
    certs = []
    for i, (row, b) in enumerate(zip(outer.rows, outer.bounds)):
        res = implies(inner, row, b)
        if not res.holds:
            return Comparison(False, res.witness, "outer", i)
        certs.append(res.certificate)
    return Comparison(True, certificates=certs)


def equal(a: InstantiatedSystem, b: InstantiatedSystem) -> Comparison:
    """Polytope equality.  On failure ``direction`` is ``"a"`` when the
    witness lies in ``b`` but violates row ``row`` of ``a`` (so b is not a
    subset of a), and ``"b"`` for the converse."""
    fwd = contains(a, b)
    if not fwd.holds:
        return Comparison(False, fwd.witness, "a", fwd.row)
    back = contains(b, a)
    if not back.holds:
        return Comparison(False, back.witness, "b", back.row)
    return Comparison(True, certificates=fwd.certificates + back.certificates)


def redundant_rows(system: InstantiatedSystem,
                   order: Iterable[int] | None = None) -> list[int]:
    """Indices of rows implied by the rows kept so far.  Rows are tested one
    at a time and removed greedily, so the returned set can be dropped as a
    whole without changing the polytope."""
    if not is_feasible(system):
        return []
    alive = list(range(len(system)))
    dropped = []
    for i in (order if order is not None else range(len(system))):
        rest = system.subset(j for j in alive if j != i)
        res = implies(rest, system.rows[i], system.bounds[i])
        if res.holds:
            alive.remove(i)
            dropped.append(i)
    return dropped


def point_to_json(point: Sequence[Fraction] | None,
                  variables: Sequence[str]) -> dict | None:
    if point is None:
        return None
    return {v: str(x) for v, x in zip(variables, point)}


# ---------------------------------------------------------------------------
# Exact random sampling
# ---------------------------------------------------------------------------

def _nullspace(rows: Sequence[Row], dim: int) -> list[list[Fraction]]:
    """Basis of {d : r . d = 0 for all rows}, by exact row reduction."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(dim):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        piv = m[r][c]
        m[r] = [v / piv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    basis = []
    for free in (c for c in range(dim) if c not in pivots):
        v = [Fraction(0)] * dim
        v[free] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -m[i][free]
        basis.append(v)
    return basis


def _implicit_equalities(system: InstantiatedSystem) -> list[Row]:
    """Rows paired with an exact opposite (a . x <= b and -a . x <= -b)."""
    seen = {(row, b) for row, b in zip(system.rows, system.bounds)}
    out = []
    for row, b in zip(system.rows, system.bounds):
        if any(row) and (tuple(-a for a in row), -b) in seen:
            out.append(row)
    return out


def hit_and_run(system: InstantiatedSystem, count: int, rng,
                start: Sequence[Fraction] | None = None, restart: int = 8,
                box: Fraction = Fraction(10), grid: int = 100
                ) -> list[tuple[Fraction, ...]]:
    """``count`` exact rational points of a nonempty system.

    Directions are drawn in the nullspace of paired equality rows; each step
    moves to a grid fraction of the feasible chord, sometimes to one of its
    ends so that boundary points are covered.  Chains restart from ``start``
    every ``restart`` steps to keep denominators small, and unbounded chords
    are clipped to ``box``.  ``rng`` is a numpy Generator.
    """
    x0 = tuple(start) if start is not None else find_point(system)
    if x0 is None:
        raise ValueError("cannot sample an empty system")
    x0 = tuple(_frac(v) for v in x0)
    basis = _nullspace(_implicit_equalities(system), system.dim)
    out: list[tuple[Fraction, ...]] = []
    x = x0
    step = 0
    while len(out) < count:
        if step % restart == 0:
            x = x0
        step += 1
        if not basis:
            out.append(x)
            continue
        w = [int(v) for v in rng.integers(-3, 4, size=len(basis))]
        d = [sum(c * b[i] for c, b in zip(w, basis)) for i in range(system.dim)]
        if not any(d):
            continue
        lo, hi = -box, box
        for row, s in zip(system.rows, system.slack(x)):
            rate = sum(a * v for a, v in zip(row, d))
            if rate > 0:
                hi = min(hi, s / rate)
            elif rate < 0:
                lo = max(lo, s / rate)
        roll = rng.random()
        if roll < 0.1:
            t = lo
        elif roll < 0.2:
            t = hi
        else:
            t = lo + (hi - lo) * Fraction(int(rng.integers(0, grid + 1)), grid)
        x = tuple(v + t * dv for v, dv in zip(x, d))
        out.append(x)
    return out
