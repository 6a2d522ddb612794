"""Command-line entry point.

Every command writes canonical JSON (sorted keys, rationals as "p/q") or
CSV, and exits 0 only when the run found no failures.  Invalid input gives
exit code 2 and a failure JSON on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .atoms import random_table, to_rational, validate
from .polytope import contains, point_to_json

WORKERS_ENV = "SECRANGE_WORKERS"


class InputError(Exception):
    pass


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def trial_seed(seed: int, index: int) -> int:
    """Independent per-trial seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


def _fan_out(fn: Callable, items: Sequence) -> list:
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verify-projection
# ---------------------------------------------------------------------------

def _verify_one(job) -> dict:
    from .fme import inductive_verify
    K, seed, index, nonneg, prune = job
    s = trial_seed(seed, index)
    rep = inductive_verify(K, random_table(K, s), nonneg, prune=prune)
    out = rep.to_json()
    out.update({"trial": index, "table_seed": s})
    return out


def cmd_verify(args) -> int:
    if args.k < 3:
        raise InputError("--k must be at least 3")
    jobs = [(args.k, args.seed, i, args.with_nonneg, args.prune)
            for i in range(args.trials)]
    results = sorted(_fan_out(_verify_one, jobs), key=lambda r: r["trial"])
    failures = sum(not r["passed"] for r in results)
    report = {"command": "verify-projection", "K": args.k,
              "trials": args.trials, "seed": args.seed,
              "with_nonneg": args.with_nonneg, "prune": args.prune,
              "failures": failures, "results": results}
    _emit(canonical(report), args.out)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# gen-region
# ---------------------------------------------------------------------------

KINDS = ("theorem1", "pre", "structure", "prop-k3", "prop-k4", "naive-k4")


def make_region(kind: str, K: int | None, step: int | None = None,
                nonneg: bool = False):
    from .regions import (inductive_structure, pre_elimination,
                          reference_region, region_K, theorem1)
    if kind in ("prop-k3", "prop-k4", "naive-k4"):
        if K is not None and K != region_K(kind):
            raise InputError(f"{kind} is defined for K={region_K(kind)}")
        return reference_region(kind, nonneg)
    if K is None:
        raise InputError(f"--k is required for {kind}")
    try:
        if kind == "theorem1":
            return theorem1(K, nonneg)
        if kind == "pre":
            return pre_elimination(K, nonneg)
        if kind == "structure":
            if step is None:
                raise InputError("--step is required for structure")
            return inductive_structure(step, K, nonneg)
    except ValueError as exc:
        raise InputError(str(exc))
    raise InputError(f"unknown region kind {kind!r}")


def cmd_gen_region(args) -> int:
    reg = make_region(args.kind, args.k, args.step, args.with_nonneg)
    _emit(canonical(reg.to_json()), args.out)
    return 0


# ---------------------------------------------------------------------------
# check-containment
# ---------------------------------------------------------------------------

def _containment_one(job) -> dict:
    kind_a, kind_b, K, seed, index, nonneg = job
    s = trial_seed(seed, index)
    table = random_table(K, s)
    a = make_region(kind_a, K, nonneg=nonneg)
    b = make_region(kind_b, K, nonneg=nonneg)
    order = a.variables
    sa, sb = a.instantiate(table, order), b.instantiate(table, order)
    fwd = contains(sa, sb)
    out = {"trial": index, "table_seed": s, "holds": fwd.holds,
           "witness": point_to_json(fwd.witness, sa.variables),
           "strict_witness": None}
    if fwd.holds:
        back = contains(sb, sa)
        if not back.holds:
            out["strict_witness"] = point_to_json(back.witness, sa.variables)
    return out


def _kind_K(kind: str, k: int | None) -> int | None:
    from .regions import REFERENCE_KINDS, region_K
    return region_K(kind) if kind in REFERENCE_KINDS else k


def cmd_containment(args) -> int:
    ks = {x for x in (_kind_K(args.a, args.k), _kind_K(args.b, args.k))
          if x is not None}
    if len(ks) != 1:
        raise InputError("regions must share one K (pass --k for theorem1)")
    K = ks.pop()
    for kind in (args.a, args.b):
        if kind not in ("theorem1", "prop-k3", "prop-k4", "naive-k4"):
            raise InputError(f"containment needs total-rate regions, "
                             f"got {kind}")
    jobs = [(args.a, args.b, K, args.seed, i, args.with_nonneg)
            for i in range(args.trials)]
    results = sorted(_fan_out(_containment_one, jobs),
                     key=lambda r: r["trial"])
    failures = sum(not r["holds"] for r in results)
    report = {"command": "check-containment", "outer": args.a,
              "inner": args.b, "K": K, "trials": args.trials,
              "seed": args.seed, "failures": failures,
              "strict_count": sum(r["strict_witness"] is not None
                                  for r in results),
              "results": results}
    _emit(canonical(report), args.out)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# channel-atoms, boundary, simulate
# ---------------------------------------------------------------------------

def _channel(path: str):
    from .channel import load_channel_spec
    try:
        return load_channel_spec(_load_json(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad channel spec: {exc}")


def cmd_channel_atoms(args) -> int:
    from .channel import atoms_from_channel
    cascade, aux = _channel(args.spec)
    if aux is None:
        raise InputError("channel spec needs an \"aux\" section for atoms")
    table = atoms_from_channel(cascade, aux)
    bad = validate(table, tol=1e-9)
    out = {"command": "channel-atoms", "table": table.to_json(),
           "valid": bad is None,
           "violation": None if bad is None else bad.detail}
    if bad is None and args.rational:
        try:
            out["rational"] = to_rational(table).to_json()
        except ValueError as exc:
            out["valid"], out["violation"] = False, str(exc)
    _emit(canonical(out), args.out)
    return 0 if out["valid"] else 1


def _weights(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(w) for w in raw.split(","))
    except ValueError:
        raise InputError(f"bad weight vector {raw!r}")


def cmd_boundary(args) -> int:
    from .boundary import BoundaryQuery, OptimizerConfig, sweep
    cascade, _ = _channel(args.spec)
    sizes = tuple(int(s) for s in args.aux_sizes.split(",")) \
        if args.aux_sizes else None
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    weights = [_weights(w) for w in args.weights]
    try:
        template = BoundaryQuery(cascade, weights[0] if weights
                                 else (1.0,) * cascade.K, sizes, cfg)
        for w in weights:
            BoundaryQuery(cascade, w, sizes, cfg)
    except ValueError as exc:
        raise InputError(str(exc))
    _emit(sweep(template, weights, workers()), args.out)
    return 0


def cmd_simulate(args) -> int:
    from .simulator import BudgetExceeded, run_spec
    spec = _load_json(args.spec)
    try:
        report = run_spec(spec, args.seed)
    except (KeyError, ValueError, TypeError, IndexError,
            BudgetExceeded) as exc:
        raise InputError(f"bad simulation spec: {exc}")
    _emit(canonical(report.to_json()), args.out)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="secrange",
        description="Verify and evaluate secrecy capacity regions of "
                    "degraded broadcast channels.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-projection",
                       help="eliminate split rates and compare every stage")
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--with-nonneg", action="store_true")
    v.add_argument("--prune", choices=("lp", "syntactic"), default="lp")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen-region", help="print a region as JSON")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--step", type=int)
    g.add_argument("--with-nonneg", action="store_true")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_region)

    c = sub.add_parser("check-containment",
                       help="check region A contains region B per table")
    c.add_argument("--a", required=True, choices=KINDS)
    c.add_argument("--b", required=True, choices=KINDS)
    c.add_argument("--k", type=int)
    c.add_argument("--trials", type=int, default=10)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--with-nonneg", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_containment)

    a = sub.add_parser("channel-atoms", help="atom table of a channel spec")
    a.add_argument("--spec", required=True)
    a.add_argument("--rational", action="store_true",
                   help="also print the table snapped to the 2^-40 grid")
    a.add_argument("--out")
    a.set_defaults(func=cmd_channel_atoms)

    b = sub.add_parser("boundary", help="weighted-sum-rate sweep as CSV")
    b.add_argument("--spec", required=True)
    b.add_argument("--weights", action="append", default=[],
                   help="comma-separated mu_1..mu_K; repeat for a sweep")
    b.add_argument("--aux-sizes")
    b.add_argument("--restarts", type=int, default=10)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_boundary)

    s = sub.add_parser("simulate", help="build a code and evaluate it")
    s.add_argument("--spec", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stdout.write(canonical({"ok": False, "command": args.command,
                                    "error": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
