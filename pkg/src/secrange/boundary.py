"""Weighted-sum-rate search over the capacity region of a concrete channel.

For a fixed auxiliary chain the region is a polytope, so the inner problem
is an LP.  The outer problem over auxiliary chains is non-convex; it is
attacked with coordinate ascent over the simplex rows of each conditional
plus random restarts.  Results are achievable lower bounds on the optimum.
"""

from __future__ import annotations

import csv
import io
from functools import lru_cache
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .channel import AuxChain, ChannelCascade, atoms_from_channel
from .regions import theorem1

RECHECK_TOL = 1e-9
LABEL = "achievable lower bound"


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 10
    sweeps: int = 40
    steps: tuple[float, ...] = (0.5, 0.25, 0.1, 0.03, 0.01, 0.001)
    seed: int = 0


@dataclass(frozen=True, eq=False)
class BoundaryQuery:
    cascade: ChannelCascade
    weights: tuple[float, ...]
    aux_sizes: tuple[int, ...] | None = None
    config: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != self.cascade.K:
            raise ValueError(f"need {self.cascade.K} weights, got {len(w)}")
        if (w < 0).any() or not (w > 0).any():
            raise ValueError("weights must be >= 0 with at least one > 0")

    def sizes(self) -> list[int]:
        if self.aux_sizes is None:
            return [self.cascade.x_size] * (self.cascade.K - 1)
        if len(self.aux_sizes) != self.cascade.K - 1:
            raise ValueError(f"need {self.cascade.K - 1} auxiliary sizes")
        return list(self.aux_sizes)


@dataclass
class BoundaryResult:
    value: float
    rates: np.ndarray
    aux: AuxChain
    label: str = LABEL


@lru_cache(maxsize=None)
def _region(K: int):
    return theorem1(K, nonneg=True)


def inner_lp(cascade: ChannelCascade, aux: AuxChain,
             weights: Sequence[float]) -> tuple[float, np.ndarray]:
    """max mu . R over the nonnegative capacity polytope at this chain."""
    table = atoms_from_channel(cascade, aux)
    A, b = _region(cascade.K).float_matrices(table)
    # Every right-hand side is >= 0 on valid tables; clear rounding noise.
    b_lp = np.maximum(b, 0.0)
    mu = np.asarray(weights, dtype=float)
    res = linprog(-mu, A_ub=A, b_ub=b_lp, bounds=(None, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"inner LP failed: {res.message}")
    rates = np.maximum(res.x, 0.0)
    if (A @ rates > b + RECHECK_TOL).any():
        raise RuntimeError("inner LP point violates the region beyond 1e-9")
    return float(mu @ rates), rates


def _chain_from_rows(shapes, rows) -> AuxChain:
    dists, it = [], iter(rows)
    for s in shapes:
        if len(s) == 1:
            dists.append(next(it))
        else:
            dists.append(np.array([next(it) for _ in range(s[0])]))
    return AuxChain.build(dists)


def _shapes(K: int, x_size: int, sizes: Sequence[int]) -> list[tuple]:
    dims = list(sizes) + [x_size]
    return [(dims[0],)] + [(a, b) for a, b in zip(dims, dims[1:])]


def _random_rows(rng: np.random.Generator, shapes) -> list[np.ndarray]:
    rows = []
    for s in shapes:
        n = s[-1]
        for _ in range(1 if len(s) == 1 else s[0]):
            rows.append(rng.dirichlet(np.ones(n)))
    return rows


def _moves(row: np.ndarray, step: float):
    n = len(row)
    for i in range(n):
        yield np.eye(n)[i]
        for j in range(n):
            if i != j and row[i] > 0:
                new = row.copy()
                d = min(step, new[i])
                new[i] -= d
                new[j] += d
                yield new


def _climb(query: BoundaryQuery, rows: list[np.ndarray]
           ) -> tuple[float, list[np.ndarray]]:
    cas, cfg = query.cascade, query.config
    shapes = _shapes(cas.K, cas.x_size, query.sizes())

    def score(rs):
        return inner_lp(cas, _chain_from_rows(shapes, rs), query.weights)[0]

    best = score(rows)
    for _ in range(cfg.sweeps):
        improved = False
        for step in cfg.steps:
            for r in range(len(rows)):
                for cand in _moves(rows[r], step):
                    trial = rows[:r] + [cand] + rows[r + 1:]
                    v = score(trial)
                    if v > best + 1e-12:
                        best, rows, improved = v, trial, True
        if not improved:
            break
    return best, rows


def _restart(query: BoundaryQuery, index: int) -> tuple[float, list]:
    cas = query.cascade
    rng = np.random.default_rng([query.config.seed, index])
    shapes = _shapes(cas.K, cas.x_size, query.sizes())
    return _climb(query, _random_rows(rng, shapes))


def maximize_weighted(query: BoundaryQuery, workers: int = 1) -> BoundaryResult:
    cas = query.cascade
    shapes = _shapes(cas.K, cas.x_size, query.sizes())
    idx = range(query.config.restarts)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_restart, [query] * len(idx), idx))
    else:
        runs = [_restart(query, i) for i in idx]
    best_val, best_rows = -np.inf, None
    for v, rows in runs:  # ties go to the earliest restart
        if v > best_val:
            best_val, best_rows = v, rows
    aux = _chain_from_rows(shapes, best_rows)
    value, rates = inner_lp(cas, aux, query.weights)
    return BoundaryResult(value, rates, aux)


def sweep(template: BoundaryQuery, weight_list: Sequence[Sequence[float]],
          workers: int = 1) -> str:
    """CSV text with header mu_1..mu_K, R_1..R_K, value.

    The best chain found for any weight vector is also tried at every other
    one, so each row is the best over a common candidate set.  This can only
    raise the reported values, and it makes the chosen rate for a weight
    that is being swept weakly increasing in that weight.
    """
    K = template.cascade.K
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"mu_{k}" for k in range(1, K + 1)]
               + [f"R_{k}" for k in range(1, K + 1)] + ["value"])
    queries = [BoundaryQuery(template.cascade, tuple(mu), template.aux_sizes,
                             template.config) for mu in weight_list]
    pool = [maximize_weighted(q, workers).aux for q in queries]
    for mu in weight_list:
        best = None
        for aux in pool:
            value, rates = inner_lp(template.cascade, aux, mu)
            if best is None or value > best[0] + 1e-12:
                best = (value, rates)
        value, rates = best
        w.writerow([repr(float(m)) for m in mu]
                   + [repr(float(r)) for r in rates] + [repr(value)])
    return buf.getvalue()
