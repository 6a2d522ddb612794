"""Small-blocklength superposition/binning code with exact leakage and
error-probability evaluation.

Layer 1 carries W_1.  Layer k >= 2 is indexed by a bin w_{k,1}, a sub-bin
w_{k,2} and a randomization index l_k (layer 2 has no randomization).  Each
codeword is drawn symbol by symbol from the auxiliary conditional given its
parent codeword, and the top layer is the channel input x^n.

Every top-layer codeword is addressed by a flat index over the axes
(w_1, w_21, w_22, l_2, w_31, w_32, l_3, ...) in row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log2, prod
from typing import Sequence, Union

import numpy as np
from scipy.stats import binomtest

from .channel import AuxChain, ChannelCascade, check_compatible, joint

DEFAULT_BUDGET = 2 ** 26
MAX_OUTPUTS = 2 ** 20

MessageItem = Union[int, tuple[int, int]]


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CodeParams:
    """``layers[k-2] = (M_{k,1}, M_{k,2}, M_{k,3})`` for k = 2..K."""

    n: int
    m1: int
    layers: tuple[tuple[int, int, int], ...]
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be >= 1")
        if self.m1 < 1 or any(m < 1 for lay in self.layers for m in lay):
            raise ValueError("codebook sizes must be >= 1")
        if any(len(lay) != 3 for lay in self.layers):
            raise ValueError("each layer needs (M_k1, M_k2, M_k3)")
        if not self.layers:
            raise ValueError("need at least two layers")
        if self.layers[0][2] != 1:
            raise ValueError("layer 2 has no randomization index (M_23 = 1)")

    @property
    def K(self) -> int:
        return len(self.layers) + 1

    def dims(self, k: int | None = None) -> tuple[int, ...]:
        """Index axes of layer k (default: top layer)."""
        k = self.K if k is None else k
        out = [self.m1]
        for lay in self.layers[:k - 1]:
            out += list(lay)
        return tuple(out)

    @property
    def top_count(self) -> int:
        return prod(self.dims())

    def rates(self) -> dict[str, float]:
        out = {"R1": log2(self.m1) / self.n}
        for k, lay in enumerate(self.layers, start=2):
            for i, m in enumerate(lay, start=1):
                out[f"R{k},{i}"] = log2(m) / self.n
        return out

    def to_json(self) -> dict:
        return {"K": self.K, "n": self.n, "M1": self.m1,
                "layers": [list(lay) for lay in self.layers],
                "budget": self.budget}

    @classmethod
    def from_json(cls, data: dict) -> CodeParams:
        p = cls(int(data["n"]), int(data["M1"]),
                tuple(tuple(int(m) for m in lay) for lay in data["layers"]),
                int(data.get("budget", DEFAULT_BUDGET)))
        if "K" in data and int(data["K"]) != p.K:
            raise ValueError(f"K={data['K']} but {p.K} layers given")
        return p


def message_axes(item: MessageItem) -> list[int]:
    """Top-index axes carrying a message: layer k or component (k, i)."""
    if isinstance(item, (tuple, list)):
        k, i = item
        if k == 1 and i == 1:
            return [0]
        if k >= 2 and i in (1, 2):
            return [1 + 3 * (k - 2) + (i - 1)]
        raise ValueError(f"no message component {tuple(item)}")
    k = int(item)
    if k == 1:
        return [0]
    if k >= 2:
        base = 1 + 3 * (k - 2)
        return [base, base + 1]
    raise ValueError(f"no layer {k}")


def _decoded_axes(k: int) -> list[int]:
    out = []
    for j in range(1, k + 1):
        out += message_axes(j)
    return out


@dataclass(frozen=True, eq=False)
class Codebook:
    params: CodeParams
    aux: AuxChain
    layers: tuple[np.ndarray, ...]  # layer k has shape dims(k) + (n,)
    seed: int

    @property
    def top(self) -> np.ndarray:
        """All channel inputs, shape (top_count, n)."""
        return self.layers[-1].reshape(-1, self.params.n)


def _sample_children(rng: np.random.Generator, parent: np.ndarray | None,
                     cond: np.ndarray, extra: tuple[int, ...],
                     n: int) -> np.ndarray:
    """Draw |extra| children per parent codeword, symbol-wise from cond."""
    if parent is None:
        cdf = np.cumsum(cond)
        u = rng.random(extra + (n,))
        return np.minimum((u[..., None] >= cdf).sum(-1), len(cond) - 1)
    cdf = np.cumsum(cond, axis=1)[parent]  # parents... x n x |child|
    cdf = cdf.reshape(parent.shape[:-1] + (1,) * len(extra) + cdf.shape[-2:])
    u = rng.random(parent.shape[:-1] + extra + (n,))
    return np.minimum((u[..., None] >= cdf).sum(-1), cond.shape[1] - 1)


def build_codebook(params: CodeParams, aux: AuxChain, seed: int) -> Codebook:
    if aux.K != params.K:
        raise ValueError(f"aux chain is for K={aux.K}, code for K={params.K}")
    if params.top_count * params.n > params.budget:
        raise BudgetExceeded(f"{params.top_count} codewords exceed budget")
    rng = np.random.default_rng(seed)
    n = params.n
    layers = [_sample_children(rng, None, aux.dists[0], (params.m1,), n)]
    for k, lay in enumerate(params.layers, start=2):
        layers.append(_sample_children(rng, layers[-1], aux.dists[k - 1],
                                       tuple(lay), n))
    for a in layers:
        a.setflags(write=False)
    return Codebook(params, aux, tuple(layers), seed)


def _top_index(params: CodeParams, messages: Sequence, ls: Sequence[int]) -> int:
    """messages = (w_1, (w_21, w_22), (w_31, w_32), ...); ls = (l_3, ...)."""
    if len(messages) != params.K or len(ls) != params.K - 2:
        raise ValueError("message/randomization tuple has the wrong length")
    idx = [messages[0]]
    for k in range(2, params.K + 1):
        w = messages[k - 1]
        idx += [w[0], w[1], 0 if k == 2 else ls[k - 3]]
    dims = params.dims()
    for v, d in zip(idx, dims):
        if not 0 <= v < d:
            raise IndexError(f"index {v} outside 0..{d - 1}")
    return int(np.ravel_multi_index(idx, dims))


def encode(book: Codebook, messages: Sequence,
           rng: np.random.Generator) -> np.ndarray:
    """Stochastic encoder: uniform l_k, then the top-layer codeword."""
    ls = [int(rng.integers(lay[2])) for lay in book.params.layers[1:]]
    return book.top[_top_index(book.params, messages, ls)]


def messages_of(params: CodeParams, t: int, k: int | None = None) -> tuple:
    """(w_1, (w_21, w_22), ...) up to layer k for flat top index t."""
    k = params.K if k is None else k
    idx = np.unravel_index(t, params.dims())
    out: list = [int(idx[0])]
    for j in range(2, k + 1):
        b = 1 + 3 * (j - 2)
        out.append((int(idx[b]), int(idx[b + 1])))
    return tuple(out)


def _likelihoods(top: np.ndarray, chan: np.ndarray, budget: int) -> np.ndarray:
    """P(y^n | x^n(t)) for all t, y^n with y^n in row-major order."""
    T, n = top.shape
    ny = chan.shape[1]
    if ny ** n > MAX_OUTPUTS:
        raise BudgetExceeded(f"|Y|^n = {ny}^{n} exceeds 2^20")
    if T * ny ** n > budget:
        raise BudgetExceeded(f"{T} x {ny}^{n} exceeds the enumeration budget")
    L = np.ones((T, 1))
    for i in range(n):
        L = (L[:, :, None] * chan[top[:, i]][:, None, :]).reshape(T, -1)
    return L


def _likelihood_one(top: np.ndarray, chan: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.ones(top.shape[0])
    for i in range(top.shape[1]):
        out = out * chan[top[:, i], y[i]]
    return out


def _message_keys(params: CodeParams, axes: Sequence[int]) -> np.ndarray:
    """Per top index, a flat id of the values on ``axes``."""
    dims = params.dims()
    grids = np.indices(dims).reshape(len(dims), -1)
    if not axes:
        return np.zeros(grids.shape[1], dtype=np.int64)
    sub = [dims[a] for a in axes]
    return np.ravel_multi_index(tuple(grids[a] for a in axes), sub)


def decode(book: Codebook, cascade: ChannelCascade, k: int, y: Sequence[int],
           mode: str = "ml", eps: float = 0.1):
    """Messages (w_1, ..., W_k) or the string "none" / "ambiguous"."""
    params = book.params
    y = np.asarray(y)
    if mode == "ml":
        chan = cascade.output_given_x(k)
        t = int(np.argmax(_likelihood_one(book.top, chan, y)))
        return messages_of(params, t, k)
    if mode != "typicality":
        raise ValueError(f"unknown decoding mode {mode!r}")
    return _typicality_decode(book, cascade, k, y, eps)


def _typicality_decode(book, cascade, k, y, eps):
    params, K, n = book.params, book.params.K, book.params.n
    check_compatible(cascade, book.aux)
    p = joint(cascade, book.aux)
    # P(U_1, ..., U_k, Y_k)
    keep = list(range(k)) + [K - 1 + k]
    pk = p.sum(axis=tuple(i for i in range(p.ndim) if i not in keep))
    dims_k = params.dims(k)
    count = prod(dims_k)
    cols = []
    for j in range(1, k + 1):
        lay = book.layers[j - 1]
        # broadcast layer j up to layer-k indexing
        pad = len(dims_k) - (lay.ndim - 1)
        cols.append(np.broadcast_to(
            lay.reshape(lay.shape[:-1] + (1,) * pad + (n,)),
            dims_k + (n,)).reshape(count, n))
    found = set()
    for t in range(count):
        sym = tuple(c[t] for c in cols) + (y,)
        emp = np.zeros(pk.shape)
        np.add.at(emp, sym, 1.0 / n)
        if np.all(np.abs(emp - pk) <= eps * pk):
            idx = np.unravel_index(t, dims_k)
            msg = [int(idx[0])] + [(int(idx[1 + 3 * (j - 2)]),
                                    int(idx[2 + 3 * (j - 2)]))
                                   for j in range(2, k + 1)]
            found.add(tuple(msg))
            if len(found) > 1:
                return "ambiguous"
    return found.pop() if found else "none"


# ---------------------------------------------------------------------------
# Exact evaluation
# ---------------------------------------------------------------------------

def _resolve_set(S: Sequence[MessageItem]) -> list[int]:
    axes: list[int] = []
    for item in S:
        for a in message_axes(item):
            if a not in axes:
                axes.append(a)
    return sorted(axes)


def _kl_bits(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise D(p || q) with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / q), 0.0)
    return terms.sum(axis=-1)


def exact_leakage(book: Codebook, cascade: ChannelCascade, r: int,
                  S: Sequence[MessageItem]) -> float:
    """I(W_S; Y_r^n) in bits for this fixed codebook."""
    params = book.params
    axes = _resolve_set(S)
    if any(a >= len(params.dims()) for a in axes):
        raise ValueError("message set refers to a layer the code lacks")
    L = _likelihoods(book.top, cascade.output_given_x(r), params.budget)
    keys = _message_keys(params, axes)
    groups = int(keys.max()) + 1
    cond = np.zeros((groups, L.shape[1]))
    np.add.at(cond, keys, L)
    cond /= np.bincount(keys, minlength=groups)[:, None]
    py = L.mean(axis=0)
    val = float(_kl_bits(cond, py).mean())
    return min(max(val, 0.0), log2(groups))


def _ml_map(L: np.ndarray) -> np.ndarray:
    """Decoded top index per y^n (ties to the lowest index)."""
    return np.argmax(L, axis=0)


def exact_error(book: Codebook, cascade: ChannelCascade, k: int) -> float:
    params = book.params
    L = _likelihoods(book.top, cascade.output_given_x(k), params.budget)
    keys = _message_keys(params, _decoded_axes(k))
    dec = keys[_ml_map(L)]  # decoded message id per y^n
    correct = (L * (keys[:, None] == dec[None, :])).sum() / L.shape[0]
    return float(max(0.0, 1.0 - correct))


@dataclass
class Estimate:
    value: float
    low: float
    high: float
    trials: int

    def covers(self, x: float) -> bool:
        return self.low <= x <= self.high

    def to_json(self) -> dict:
        return {"value": self.value, "ci95": [self.low, self.high],
                "trials": self.trials}


def _sample_outputs(rng, book, chan, size):
    t = rng.integers(book.params.top_count, size=size)
    x = book.top[t]
    cdf = np.cumsum(chan, axis=1)[x]
    u = rng.random(x.shape)
    y = np.minimum((u[..., None] >= cdf).sum(-1), chan.shape[1] - 1)
    return t, y


def _batch_likelihoods(top, chan, y):
    out = np.ones((y.shape[0], top.shape[0]))
    for i in range(top.shape[1]):
        out = out * chan[top[:, i][None, :], y[:, i][:, None]]
    return out


def _batches(trials: int, size: int = 4096):
    done, b = 0, 0
    while done < trials:
        m = min(size, trials - done)
        yield b, m
        done += m
        b += 1


def mc_error(book: Codebook, cascade: ChannelCascade, k: int, trials: int,
             seed: int) -> Estimate:
    params = book.params
    chan = cascade.output_given_x(k)
    keys = _message_keys(params, _decoded_axes(k))
    errors = 0
    for b, m in _batches(trials):
        rng = np.random.default_rng([seed, b])
        t, y = _sample_outputs(rng, book, chan, m)
        dec = np.argmax(_batch_likelihoods(book.top, chan, y), axis=1)
        errors += int((keys[dec] != keys[t]).sum())
    ci = binomtest(errors, trials).proportion_ci(0.95, method="wilson")
    return Estimate(errors / trials, float(ci.low), float(ci.high), trials)


def mc_leakage(book: Codebook, cascade: ChannelCascade, r: int,
               S: Sequence[MessageItem], trials: int, seed: int) -> Estimate:
    """Mean of log P(y|w_S)/P(y) over sampled (w, l, y^n); the densities
    themselves are exact, so the estimate is unbiased."""
    params = book.params
    chan = cascade.output_given_x(r)
    keys = _message_keys(params, _resolve_set(S))
    groups = int(keys.max()) + 1
    sizes = np.bincount(keys, minlength=groups)
    samples = []
    for b, m in _batches(trials):
        rng = np.random.default_rng([seed, b])
        t, y = _sample_outputs(rng, book, chan, m)
        L = _batch_likelihoods(book.top, chan, y)  # trials x T
        py = L.mean(axis=1)
        per_group = np.zeros((m, groups))
        np.add.at(per_group.T, keys, L.T)
        pw = per_group[np.arange(m), keys[t]] / sizes[keys[t]]
        samples.append(np.log2(pw / py))
    s = np.concatenate(samples)
    mean = float(s.mean())
    half = 1.959963984540054 * float(s.std(ddof=1)) / np.sqrt(len(s)) \
        if len(s) > 1 else float("inf")
    return Estimate(mean, float(mean - half), float(mean + half), trials)


def error_probability(book: Codebook, cascade: ChannelCascade, k: int,
                      mode: str = "exact", trials: int = 0,
                      seed: int = 0) -> float | Estimate:
    if mode == "exact":
        return exact_error(book, cascade, k)
    if mode == "monte-carlo":
        if trials < 1:
            raise ValueError("Monte-Carlo mode needs trials >= 1")
        return mc_error(book, cascade, k, trials, seed)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Spec-file runs
# ---------------------------------------------------------------------------

@dataclass
class SimReport:
    leakage_bits: float | None
    error_prob: float | dict | None
    rates: dict
    budget_used: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"leakage_bits": self.leakage_bits, "error_prob": self.error_prob,
               "rates": self.rates, "budget_used": self.budget_used,
               "seed": self.seed}
        out.update(self.extra)
        return out


def run_spec(spec: dict, seed: int) -> SimReport:
    """Build a codebook from a simulation spec and evaluate it.

    ``spec`` holds "params", "channel" (cascade JSON, optionally with "aux"),
    an optional top-level "aux", and optional "leakage"
    ({"receiver", "message_set"}) and "error" ({"receiver", "mode",
    "trials"}) sections.
    """
    params = CodeParams.from_json(spec["params"])
    cascade = ChannelCascade.from_json(spec["channel"])
    aux_json = spec.get("aux") or spec["channel"].get("aux")
    if aux_json is None:
        raise ValueError("simulation spec needs an auxiliary chain")
    aux = AuxChain.from_json(aux_json)
    check_compatible(cascade, aux)
    book = build_codebook(params, aux, seed)
    used = 0
    leak = err = None
    if "leakage" in spec:
        sec = spec["leakage"]
        S = [tuple(i) if isinstance(i, list) else int(i)
             for i in sec["message_set"]]
        leak = exact_leakage(book, cascade, int(sec["receiver"]), S)
        used += params.top_count * cascade.y_size(int(sec["receiver"])) ** params.n
    if "error" in spec:
        sec = spec["error"]
        k = int(sec["receiver"])
        if sec.get("mode", "exact") == "exact":
            err = exact_error(book, cascade, k)
            used += params.top_count * cascade.y_size(k) ** params.n
        else:
            est = mc_error(book, cascade, k, int(sec["trials"]), seed)
            err = est.to_json()
            used += int(sec["trials"]) * params.top_count
    return SimReport(leak, err, params.rates(), used, seed)
