"""Command-line interface.

Subcommands: ``transpr`` materializes transition matrices, ``simrank``
answers a single-pair query as one JSON record, ``bench`` runs the
benchmark harness, ``gen`` writes synthetic graphs, and ``oracle``
evaluates the brute-force enumeration reference on small graphs.

Every command is deterministic under ``--seed``; without it a seed is
drawn and reported so runs can be replayed.  The ``USIMRANK_STORE``
environment variable supplies a default matrix store directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import statistics
import sys

from . import __version__
from .accel import simrank_speedup, simrank_two_stage
from .graph import (
    GraphFormatError,
    RMAT_DEFAULT_WEIGHTS,
    gen_rmat,
    load_edge_list,
    save_edge_list,
)
from .oracle import (
    EnumerationCapError,
    exact_kstep,
    exact_meeting,
    exact_simrank_uncertain,
)
from .sampling import simrank_sampling
from .simrank import simrank_baseline
from .transmat import (
    DEFAULT_BUDGET_BYTES,
    DEFAULT_K_MAX,
    MatrixStore,
    WalkBudgetError,
    trans_pr,
)

__all__ = ["main"]

METHODS = ("baseline", "sampling", "twostage", "speedup")


def _draw_seed() -> int:
    return int.from_bytes(os.urandom(8), "little")


def _default_store() -> str | None:
    return os.environ.get("USIMRANK_STORE")


def _add_common_query_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="edge-list file (u<TAB>v<TAB>p)")
    p.add_argument("--n", type=int, default=5, help="walk steps (default 5)")
    p.add_argument("--c", type=float, default=0.6, help="decay factor (default 0.6)")
    p.add_argument("--seed", type=int, default=None, help="seed for reproducible runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usimrank",
        description="SimRank similarities on uncertain directed graphs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpr", help="materialize k-step transition matrices")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True, help="number of steps")
    p.add_argument("--out", default=_default_store(), help="store directory")
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.add_argument("--budget-bytes", type=int, default=DEFAULT_BUDGET_BYTES)
    p.set_defaults(func=cmd_transpr)

    p = sub.add_parser("simrank", help="single-pair similarity query")
    _add_common_query_args(p)
    p.add_argument("--method", choices=METHODS, default="twostage")
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--N", type=int, default=None, help="sampled walks per side")
    p.add_argument("--l", type=int, default=None, help="exact-stage depth")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--store", default=_default_store(), help="matrix store directory")
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.add_argument("--budget-bytes", type=int, default=DEFAULT_BUDGET_BYTES)
    p.set_defaults(func=cmd_simrank)

    p = sub.add_parser("bench", help="timing / accuracy benchmark over random pairs")
    _add_common_query_args(p)
    p.add_argument(
        "--methods",
        default="sampling,twostage",
        help="comma-separated subset of: " + ",".join(METHODS),
    )
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--sweep-n", type=int, default=None,
                   help="also report max |s(n+1)-s(n)| for n=1..SWEEP_N")
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    p.add_argument("--budget-bytes", type=int, default=DEFAULT_BUDGET_BYTES)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate synthetic graphs")
    gen_sub = p.add_subparsers(dest="generator", required=True)
    q = gen_sub.add_parser("rmat", help="recursive-quadrant random graph")
    q.add_argument("--v", type=int, required=True, help="vertex count (power of two)")
    q.add_argument("--e", type=int, required=True, help="edge count")
    q.add_argument(
        "--weights",
        default=",".join(str(w) for w in RMAT_DEFAULT_WEIGHTS),
        help="quadrant weights a,b,c,d summing to 1",
    )
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_gen_rmat)

    p = sub.add_parser("oracle", help="brute-force enumeration reference")
    oracle_sub = p.add_subparsers(dest="quantity", required=True)
    q = oracle_sub.add_parser("kstep", help="exact k-step transition matrix")
    q.add_argument("--input", required=True)
    q.add_argument("--k", type=int, required=True)
    q.set_defaults(func=cmd_oracle_kstep)
    q = oracle_sub.add_parser("meeting", help="exact k-step meeting probability")
    q.add_argument("--input", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--u", type=int, required=True)
    q.add_argument("--v", type=int, required=True)
    q.set_defaults(func=cmd_oracle_meeting)
    q = oracle_sub.add_parser("simrank", help="exact n-th similarity")
    q.add_argument("--input", required=True)
    q.add_argument("--u", type=int, required=True)
    q.add_argument("--v", type=int, required=True)
    q.add_argument("--n", type=int, default=5)
    q.add_argument("--c", type=float, default=0.6)
    q.set_defaults(func=cmd_oracle_simrank)

    return parser


def cmd_transpr(args) -> int:
    g = load_edge_list(args.input)
    if args.out is None:
        raise ValueError("transpr needs --out (or the USIMRANK_STORE variable)")

    def on_step(k, walk_count, seconds):
        print(f"k={k}\twalks={walk_count}\tseconds={seconds:.3f}")

    trans_pr(
        g,
        args.k,
        MatrixStore(args.out),
        k_max=max(args.k_max, args.k),
        budget_bytes=args.budget_bytes,
        on_step=on_step,
    )
    print(f"store written to {args.out}")
    return 0


def _check_vertex(g, vid: int) -> None:
    if not (0 <= vid < g.vertex_count):
        raise ValueError(f"unknown vertex id {vid} (graph has {g.vertex_count})")


def cmd_simrank(args) -> int:
    g = load_edge_list(args.input)
    _check_vertex(g, args.u)
    _check_vertex(g, args.v)
    if args.l is not None and args.method not in ("twostage", "speedup"):
        raise ValueError(f"--l is not a parameter of method {args.method}")
    if args.N is not None and args.method == "baseline":
        raise ValueError("--N is not a parameter of method baseline")
    seed = args.seed if args.seed is not None else _draw_seed()
    rng = random.Random(seed)
    store = MatrixStore(args.store) if args.store else None
    N = args.N if args.N is not None else 1000
    l = args.l if args.l is not None else 1
    kwargs = dict(k_max=max(args.k_max, args.n), budget_bytes=args.budget_bytes)
    eps = dict(epsilon=args.epsilon, delta=args.delta)
    if args.method == "baseline":
        est = simrank_baseline(g, args.u, args.v, args.n, args.c, store, **kwargs)
    elif args.method == "sampling":
        est = simrank_sampling(g, args.u, args.v, args.n, args.c, N, rng, **eps)
    elif args.method == "twostage":
        est = simrank_two_stage(
            g, args.u, args.v, args.n, args.c, N, l, rng, store, **eps, **kwargs
        )
    else:
        est = simrank_speedup(
            g, args.u, args.v, args.n, args.c, N, l, rng, store, **eps, **kwargs
        )
    record = {
        "value": est.value,
        "method": args.method,
        "n": est.n,
        "c": est.c,
        "N": est.N,
        "l": est.l,
        "seed": seed,
        "bound": est.bound,
        "wall_ms": est.wall_ms,
        "graph": args.input,
        "u": args.u,
        "v": args.v,
    }
    print(json.dumps(record, sort_keys=True))
    return 0


def _bench_query(method, g, u, v, n, c, N, l, rng, store, k_max, budget_bytes):
    if method == "baseline":
        return simrank_baseline(g, u, v, n, c, store, k_max=k_max,
                                budget_bytes=budget_bytes)
    if method == "sampling":
        return simrank_sampling(g, u, v, n, c, N, rng)
    if method == "twostage":
        return simrank_two_stage(g, u, v, n, c, N, l, rng, store,
                                 k_max=k_max, budget_bytes=budget_bytes)
    return simrank_speedup(g, u, v, n, c, N, l, rng, store,
                           k_max=k_max, budget_bytes=budget_bytes)


def cmd_bench(args) -> int:
    g = load_edge_list(args.input)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    seed = args.seed if args.seed is not None else _draw_seed()
    k_max = max(args.k_max, args.n, (args.sweep_n or 0) + 1)
    print(f"# seed\t{seed}")
    print(f"# graph\t{args.input}\tvertices\t{g.vertex_count}\tarcs\t{g.arc_count}")

    if g.vertex_count == 0:
        print("method\ttrials\tmean_wall_ms\tmean_rel_err\tskipped_zero_truth")
        return 0

    pair_rng = random.Random(f"{seed}/pairs")
    pairs = [
        (pair_rng.randrange(g.vertex_count), pair_rng.randrange(g.vertex_count))
        for _ in range(args.trials)
    ]

    # Baseline truth for relative errors; unavailable when materialization
    # blows the byte budget.
    store = MatrixStore()
    truth: list[float] | None = []
    try:
        if args.trials > 0:
            trans_pr(g, args.n, store, k_max=k_max, budget_bytes=args.budget_bytes)
        for u, v in pairs:
            truth.append(
                simrank_baseline(g, u, v, args.n, args.c, store,
                                 k_max=k_max, budget_bytes=args.budget_bytes).value
            )
    except WalkBudgetError as exc:
        print(f"# baseline unavailable: {exc}", file=sys.stderr)
        truth = None

    print("method\ttrials\tmean_wall_ms\tmean_rel_err\tskipped_zero_truth")
    if not pairs:
        return 0
    for method in methods:
        times = []
        rel_errs = []
        skipped = 0
        for i, (u, v) in enumerate(pairs):
            rng = random.Random(f"{seed}/{method}/{i}")
            est = _bench_query(
                method, g, u, v, args.n, args.c, args.N, args.l, rng, store,
                k_max, args.budget_bytes,
            )
            times.append(est.wall_ms)
            if truth is not None:
                if truth[i] == 0.0:
                    skipped += 1
                else:
                    rel_errs.append(abs(est.value - truth[i]) / truth[i])
        mean_ms = statistics.fmean(times) if times else 0.0
        mean_err = statistics.fmean(rel_errs) if rel_errs else math.nan
        err_text = "na" if truth is None or not rel_errs else f"{mean_err:.6g}"
        print(f"{method}\t{len(pairs)}\t{mean_ms:.3f}\t{err_text}\t{skipped}")

    if args.sweep_n:
        _convergence_sweep(g, pairs, args.c, args.sweep_n, store, k_max,
                           args.budget_bytes)
    return 0


def _convergence_sweep(g, pairs, c, sweep_n, store, k_max, budget_bytes) -> None:
    """Max change between successive truncation depths, against its bound."""
    print("n\tmax_abs_delta\tbound")
    values = {}
    for n in range(1, sweep_n + 2):
        values[n] = [
            simrank_baseline(g, u, v, n, c, store, k_max=max(k_max, n + 1),
                             budget_bytes=budget_bytes).value
            for u, v in pairs
        ]
    for n in range(1, sweep_n + 1):
        deltas = [abs(a - b) for a, b in zip(values[n + 1], values[n])]
        max_delta = max(deltas) if deltas else 0.0
        print(f"{n}\t{max_delta:.6g}\t{c ** (n + 1):.6g}")


def cmd_gen_rmat(args) -> int:
    weights = tuple(float(w) for w in args.weights.split(","))
    g = gen_rmat(args.v, args.e, weights, args.seed)
    save_edge_list(g, args.out)
    print(f"wrote {g.vertex_count} vertices, {g.arc_count} arcs to {args.out}")
    return 0


def cmd_oracle_kstep(args) -> int:
    g = load_edge_list(args.input)
    matrix = exact_kstep(g, args.k)
    for u in range(matrix.vertex_count):
        print("\t".join(repr(x) for x in matrix.row(u).tolist()))
    return 0


def cmd_oracle_meeting(args) -> int:
    g = load_edge_list(args.input)
    _check_vertex(g, args.u)
    _check_vertex(g, args.v)
    print(repr(exact_meeting(g, args.u, args.v, args.k)))
    return 0


def cmd_oracle_simrank(args) -> int:
    g = load_edge_list(args.input)
    _check_vertex(g, args.u)
    _check_vertex(g, args.v)
    print(repr(exact_simrank_uncertain(g, args.u, args.v, args.n, args.c)))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        GraphFormatError,
        WalkBudgetError,
        EnumerationCapError,
        ValueError,
        KeyError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
