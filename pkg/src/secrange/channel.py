"""Degraded broadcast channels in cascade form and auxiliary chains.

A cascade is X -> Y_K -> Y_{K-1} -> ... -> Y_1, so degradedness holds by
construction.  The auxiliary chain is U_1 -> ... -> U_{K-1} -> X.  All
information quantities are in bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .atoms import AtomTable

STOCH_TOL = 1e-12
PROB_FLOOR = 1e-15


def _matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d stochastic matrix")
    a.setflags(write=False)
    return a


def _stochastic_issues(name: str, m: np.ndarray) -> list[str]:
    out = []
    if (m < 0).any():
        out.append(f"{name}: negative entry")
    sums = m.sum(axis=-1)
    for i, s in enumerate(np.atleast_1d(sums)):
        if abs(s - 1.0) > STOCH_TOL:
            out.append(f"{name}: row {i} sums to {s!r}")
    return out


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def h2(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


@dataclass(frozen=True, eq=False)
class ChannelCascade:
    """``hops[0]`` is P(Y_K|X); ``hops[i]`` is P(Y_{K-i}|Y_{K-i+1})."""

    K: int
    x_size: int
    hops: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, x_size: int, hops: Sequence) -> ChannelCascade:
        mats = tuple(_matrix(h) for h in hops)
        cas = cls(len(mats), int(x_size), mats)
        issues = validate_cascade(cas)
        if issues:
            raise ValueError("; ".join(issues))
        return cas

    @classmethod
    def identity(cls, K: int, size: int = 2) -> ChannelCascade:
        return cls.build(size, [np.eye(size)] * K)

    @classmethod
    def bsc_cascade(cls, crossovers: Sequence[float]) -> ChannelCascade:
        """One BSC per hop, starting with the X -> Y_K hop."""
        return cls.build(2, [bsc(p) for p in crossovers])

    def y_size(self, m: int) -> int:
        return self.hops[self.K - m].shape[1]

    def output_given_x(self, m: int) -> np.ndarray:
        """P(Y_m | X) as an |X| x |Y_m| matrix."""
        if not 1 <= m <= self.K:
            raise IndexError(f"receiver {m} outside 1..{self.K}")
        out = self.hops[0]
        for h in self.hops[1:self.K - m + 1]:
            out = out @ h
        return out

    def to_json(self) -> dict:
        return {"K": self.K, "x_size": self.x_size,
                "hops": [{"to": f"Y{self.K - i}", "matrix": h.tolist()}
                         for i, h in enumerate(self.hops)]}

    @classmethod
    def from_json(cls, data: dict) -> ChannelCascade:
        hops = data["hops"]
        K = int(data.get("K", len(hops)))
        if len(hops) != K:
            raise ValueError(f"expected {K} hops, got {len(hops)}")
        for i, h in enumerate(hops):
            want = f"Y{K - i}"
            if "to" in h and h["to"] != want:
                raise ValueError(f"hop {i} goes to {h['to']}, expected {want}")
        return cls.build(int(data["x_size"]), [h["matrix"] for h in hops])


def validate_cascade(cascade: ChannelCascade) -> list[str]:
    """Problems found, empty when the cascade is valid."""
    issues = []
    prev = cascade.x_size
    for i, h in enumerate(cascade.hops):
        name = f"hop to Y{cascade.K - i}"
        if h.shape[0] != prev:
            issues.append(f"{name}: {h.shape[0]} rows, expected {prev}")
        issues += _stochastic_issues(name, h)
        prev = h.shape[1]
    return issues


@dataclass(frozen=True, eq=False)
class AuxChain:
    """``dists`` = (P(U_1), P(U_2|U_1), ..., P(X|U_{K-1}))."""

    sizes: tuple[int, ...]
    dists: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, dists: Sequence) -> AuxChain:
        first = np.array(dists[0], dtype=float)
        if first.ndim != 1:
            raise ValueError("P(U_1) must be a vector")
        first.setflags(write=False)
        mats = [first] + [_matrix(d) for d in dists[1:]]
        sizes = tuple(m.shape[-1] for m in mats[:-1])
        chain = cls(sizes, tuple(mats))
        issues = chain.issues()
        if issues:
            raise ValueError("; ".join(issues))
        return chain

    @property
    def K(self) -> int:
        return len(self.dists)

    @property
    def x_size(self) -> int:
        return self.dists[-1].shape[-1]

    def issues(self) -> list[str]:
        out = _stochastic_issues("P(U1)", self.dists[0])
        prev = self.dists[0].shape[0]
        for i, d in enumerate(self.dists[1:], start=2):
            name = "P(X|U%d)" % (i - 1) if i == self.K else \
                f"P(U{i}|U{i - 1})"
            if d.shape[0] != prev:
                out.append(f"{name}: {d.shape[0]} rows, expected {prev}")
            out += _stochastic_issues(name, d)
            prev = d.shape[1]
        return out

    def marginal(self, j: int) -> np.ndarray:
        """P(U_j); j = K gives P(X)."""
        p = self.dists[0]
        for d in self.dists[1:j]:
            p = p @ d
        return p

    def forward(self, j: int) -> np.ndarray:
        """P(X | U_j) for 1 <= j <= K (identity at j = K)."""
        out = np.eye(self.x_size)
        for d in reversed(self.dists[j:]):
            out = d @ out
        return out

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes),
                "dists": [d.tolist() for d in self.dists]}

    @classmethod
    def from_json(cls, data: dict) -> AuxChain:
        chain = cls.build(data["dists"])
        if "sizes" in data and list(data["sizes"]) != list(chain.sizes):
            raise ValueError(f"aux sizes {data['sizes']} do not match "
                             f"distributions {list(chain.sizes)}")
        return chain

    @classmethod
    def degenerate(cls, K: int, px: Sequence[float]) -> AuxChain:
        """Constant U_1..U_{K-1} (size 1) and X ~ px."""
        px = np.asarray(px, dtype=float)
        return cls.build([np.ones(1)] + [np.ones((1, 1))] * (K - 2)
                         + [px[None, :]])


def load_channel_spec(data: dict | str) -> tuple[ChannelCascade, AuxChain | None]:
    if isinstance(data, str):
        data = json.loads(data)
    cas = ChannelCascade.from_json(data)
    aux = AuxChain.from_json(data["aux"]) if data.get("aux") else None
    if aux is not None:
        check_compatible(cas, aux)
    return cas, aux


def check_compatible(cascade: ChannelCascade, aux: AuxChain) -> None:
    if aux.K != cascade.K:
        raise ValueError(f"aux chain has {aux.K - 1} auxiliaries, "
                         f"cascade needs {cascade.K - 1}")
    if aux.x_size != cascade.x_size:
        raise ValueError(f"aux chain outputs |X|={aux.x_size}, "
                         f"cascade expects {cascade.x_size}")


# ---------------------------------------------------------------------------
# Joint distribution and information measures
# ---------------------------------------------------------------------------

def joint(cascade: ChannelCascade, aux: AuxChain) -> np.ndarray:
    """Tensor over axes (U_1, ..., U_{K-1}, X, Y_1, ..., Y_K)."""
    check_compatible(cascade, aux)
    K = cascade.K
    p = aux.dists[0]
    for d in aux.dists[1:]:
        # Next variable depends only on the last axis.
        p = p[..., None] * d.reshape((1,) * (p.ndim - 1) + d.shape)
    for h in cascade.hops:
        p = p[..., None] * h.reshape((1,) * (p.ndim - 1) + h.shape)
    # Axes now run U..., X, Y_K, ..., Y_1; put receivers in ascending order.
    order = list(range(K)) + list(range(2 * K - 1, K - 1, -1))
    return np.transpose(p, order)


def u_axis(K: int, k: int) -> int:
    """Axis of U_k in the joint tensor (U_K = X)."""
    if not 1 <= k <= K:
        raise IndexError(k)
    return k - 1


def y_axis(K: int, m: int) -> int:
    if not 1 <= m <= K:
        raise IndexError(m)
    return K - 1 + m


def entropy(p: np.ndarray) -> float:
    q = np.asarray(p, dtype=float).ravel()
    q = q[q >= PROB_FLOOR]
    return float(-(q * np.log2(q)).sum())


def _marginal_entropy(p: np.ndarray, keep: Sequence[int]) -> float:
    keep = sorted(set(keep))
    if not keep:
        return 0.0
    drop = tuple(i for i in range(p.ndim) if i not in keep)
    return entropy(p.sum(axis=drop))


def cmi(p: np.ndarray, a: Sequence[int], b: Sequence[int],
        c: Sequence[int] = ()) -> float:
    """I(A; B | C) over axis groups of a joint tensor."""
    a, b, c = list(a), list(b), list(c)
    return (_marginal_entropy(p, a + c) + _marginal_entropy(p, b + c)
            - _marginal_entropy(p, a + b + c) - _marginal_entropy(p, c))


def direct_cmi(p: np.ndarray, K: int, l: int, k: int, m: int) -> float:
    """I(U_k; Y_m | U_l) straight from the joint (U_0 constant)."""
    if k == 0:
        return 0.0
    cond = [] if l == 0 else [u_axis(K, l)]
    return cmi(p, [u_axis(K, k)], [y_axis(K, m)], cond)


def _cond_entropy(rows: np.ndarray, weights: np.ndarray) -> float:
    return float(sum(w * entropy(r) for w, r in zip(weights, rows)))


def atoms_from_channel(cascade: ChannelCascade, aux: AuxChain) -> AtomTable:
    """a[j,m] = H(Y_m|U_{j-1}) - H(Y_m|U_j), from chained matrices."""
    check_compatible(cascade, aux)
    K = cascade.K
    vals = [[0.0] * K for _ in range(K)]
    for m in range(1, K + 1):
        chan = cascade.output_given_x(m)
        # H(Y_m | U_j) for j = 0..K
        h = [entropy(aux.marginal(K) @ chan)]
        for j in range(1, K + 1):
            h.append(_cond_entropy(aux.forward(j) @ chan, aux.marginal(j)))
        for j in range(1, K + 1):
            vals[j - 1][m - 1] = h[j - 1] - h[j]
    return AtomTable.from_rows(vals, mode="float")


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def _dirichlet_rows(rng: np.random.Generator, rows: int, cols: int,
                    sparse: float = 0.0) -> np.ndarray:
    m = rng.dirichlet(np.ones(cols), size=rows)
    if sparse:
        # Occasionally use a hard (deterministic) row.
        for i in range(rows):
            if rng.random() < sparse:
                m[i] = np.eye(cols)[rng.integers(cols)]
    return m


def random_cascade(K: int, rng: np.random.Generator,
                   max_alphabet: int = 3) -> ChannelCascade:
    size = int(rng.integers(2, max_alphabet + 1))
    hops, prev = [], size
    for _ in range(K):
        nxt = int(rng.integers(2, max_alphabet + 1))
        hops.append(_dirichlet_rows(rng, prev, nxt, sparse=0.1))
        prev = nxt
    return ChannelCascade.build(size, hops)


def random_aux(K: int, x_size: int, rng: np.random.Generator,
               sizes: Sequence[int] | None = None) -> AuxChain:
    """Random chain; auxiliary alphabets default to |X|."""
    sizes = list(sizes) if sizes is not None else [x_size] * (K - 1)
    if len(sizes) != K - 1:
        raise ValueError(f"need {K - 1} auxiliary sizes")
    dists = [rng.dirichlet(np.ones(sizes[0]))]
    for a, b in zip(sizes, sizes[1:] + [x_size]):
        dists.append(_dirichlet_rows(rng, a, b, sparse=0.1))
    return AuxChain.build(dists)


def all_compound_pairs(K: int):
    """(l, k, m) with 0 <= l <= k <= K, 1 <= m <= K."""
    for l, k in combinations(range(K + 1), 2):
        for m in range(1, K + 1):
            yield l, k, m
    for l in range(K + 1):
        for m in range(1, K + 1):
            yield l, l, m
