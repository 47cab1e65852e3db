"""Command-line interface.

One-shot subcommands over CSV segment files: generate datasets, inspect
an index, run searches (indexed or brute force), calibrate the response
time model, and predict or measure batch-size sweeps.  Every command
reads its inputs, writes its outputs, and exits; nothing stays resident.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import datagen, perfmodel
from .core import DomainError, FormatError, ResultSet
from .engine import run_search
from .index import DEFAULT_BIN_COUNT, build_index
from .oracle import brute_force_search
from .planner import (greedy_max, greedy_min, periodic, setsplit_fixed,
                      setsplit_max, setsplit_minmax)

WORKERS_ENV = "TRAJSEEK_WORKERS"

RESULT_HEADER = ["query_traj", "query_seg", "entry_traj", "entry_seg", "t_begin", "t_end"]

PLANNERS = ("periodic", "setsplit-fixed", "setsplit-max", "setsplit-minmax",
            "greedy-min", "greedy-max")


def _resolve_workers(flag: int | None) -> int | None:
    if flag is not None:
        return flag
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return None


def _parse_sizes(spec: str) -> list[int]:
    """Batch-size list: 'a:b:step' inclusive range or comma-separated."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"size range {spec!r} must be lo:hi:step")
        lo, hi, step = (int(p) for p in parts)
        if step < 1 or hi < lo:
            raise DomainError(f"bad size range {spec!r}")
        return list(range(lo, hi + 1, step))
    sizes = [int(p) for p in spec.split(",") if p]
    if not sizes:
        raise DomainError(f"no sizes in {spec!r}")
    return sizes


def _write_results(result: ResultSet, path: str | None, canonical: bool) -> None:
    if canonical:
        result = result.canonical_order()
    lines = [",".join(RESULT_HEADER)]
    for i in range(len(result)):
        lines.append(
            f"{int(result.query_traj[i])},{int(result.query_seg[i])},"
            f"{int(result.entry_traj[i])},{int(result.entry_seg[i])},"
            f"{float(result.t_begin[i])!r},{float(result.t_end[i])!r}"
        )
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_table(header: list[str], rows: list[list], path: str | None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ── subcommands ─────────────────────────────────────────────────────────────


def _cmd_gen(args) -> int:
    if args.sample_from:
        source = datagen.load(args.sample_from)
        store = datagen.sample_queries(source, args.trajectories, args.seed)
    else:
        if not args.profile:
            raise DomainError("gen needs --profile (or --sample-from)")
        overrides = {}
        if args.timesteps is not None:
            overrides["timesteps"] = args.timesteps
        if args.start_window is not None:
            lo, _, hi = args.start_window.partition(":")
            overrides["start_window"] = (float(lo), float(hi))
        for name in ("normal_mean", "normal_std", "exp_mean", "steps_min",
                     "steps_max", "step_scale", "arena"):
            v = getattr(args, name)
            if v is not None:
                overrides[name] = v
        profile = datagen.make_profile(args.profile, args.trajectories, args.seed, **overrides)
        store = datagen.generate(profile)
    datagen.save(store, args.out)
    print(f"wrote {len(store)} segments to {args.out}")
    return 0


def _cmd_index(args) -> int:
    store = datagen.load(args.db)
    idx = build_index(store, args.m, extent_rule=args.extent_rule)
    counts = np.array([b.count for b in idx.bins], dtype=np.int64)
    nonempty = counts[counts > 0]
    doc = {
        "segments": len(store),
        "m": idx.m,
        "bin_width": idx.bin_width,
        "t0": idx.t0,
        "t_max": idx.t_max,
        "extent_rule": idx.extent_rule,
        "nonempty_bins": int(nonempty.shape[0]),
        "empty_bins": int(idx.m - nonempty.shape[0]),
        "min_bin_count": int(nonempty.min()) if nonempty.shape[0] else 0,
        "max_bin_count": int(nonempty.max()) if nonempty.shape[0] else 0,
        "mean_bin_count": float(nonempty.mean()) if nonempty.shape[0] else 0.0,
    }
    _write_json(doc, args.stats)
    return 0


def _build_plan(args, queries, idx):
    if args.planner == "periodic":
        if args.batch_size is None:
            raise DomainError("periodic needs --batch-size")
        return periodic(queries, args.batch_size, idx)
    if args.planner == "setsplit-fixed":
        if args.num_batches is None:
            raise DomainError("setsplit-fixed needs --num-batches")
        return setsplit_fixed(queries, idx, args.num_batches)
    if args.planner == "setsplit-max":
        if args.max_size is None:
            raise DomainError("setsplit-max needs --max-size")
        return setsplit_max(queries, idx, args.max_size)
    if args.planner == "setsplit-minmax":
        if args.min_size is None or args.max_size is None:
            raise DomainError("setsplit-minmax needs --min-size and --max-size")
        return setsplit_minmax(queries, idx, args.min_size, args.max_size)
    if args.planner == "greedy-min":
        if args.bound is None:
            raise DomainError("greedy-min needs --bound")
        return greedy_min(queries, idx, args.bound)
    if args.bound is None:
        raise DomainError("greedy-max needs --bound")
    return greedy_max(queries, idx, args.bound)


def _search_stats_doc(args, plan, stats) -> dict:
    sizes = plan.sizes()
    doc = {
        "planner": args.planner,
        "parameters": {
            k: getattr(args, k)
            for k in ("batch_size", "num_batches", "min_size", "max_size", "bound")
            if getattr(args, k) is not None
        },
        "d": args.d,
        "batches": len(plan.batches),
        "batch_size_min": min(sizes),
        "batch_size_max": max(sizes),
        "planned_interactions": plan.total_interactions,
        "interactions_computed": stats.interactions_computed,
        "temporal_misses": stats.temporal_misses,
        "spatial_misses": stats.spatial_misses,
        "hits": stats.hits,
        "wasteful_fraction": stats.wasteful_fraction(),
        "kernel_seconds": stats.kernel_seconds,
        "overhead_seconds": stats.overhead_seconds,
        "assembly_seconds": stats.assembly_seconds,
        "total_seconds": stats.total_seconds,
        "per_batch": [
            {
                "ordinal": b.ordinal,
                "queries": b.queries,
                "candidates": b.candidates,
                "interactions": b.interactions,
                "hits": b.hits,
                "kernel_seconds": b.kernel_seconds,
            }
            for b in stats.per_batch
        ],
    }
    if args.max_size is not None:
        doc["oversize_batches"] = sum(1 for v in sizes if v > args.max_size)
    return doc


def _cmd_search(args) -> int:
    store = datagen.load(args.db)
    queries = datagen.load(args.queries)
    idx = build_index(store, args.m)
    plan = _build_plan(args, queries, idx)
    workers = _resolve_workers(args.workers)
    result, stats = run_search(store, idx, plan, args.d, workers=workers)
    _write_results(result, args.out, args.sorted)
    if args.stats:
        _write_json(_search_stats_doc(args, plan, stats), args.stats)
    return 0


def _cmd_oracle(args) -> int:
    store = datagen.load(args.db)
    queries = datagen.load(args.queries)
    result = brute_force_search(store, queries, args.d)
    _write_results(result, args.out, args.sorted)
    if args.stats:
        _write_json({"d": args.d, "hits": len(result),
                     "pairs": len(store) * len(queries)}, args.stats)
    return 0


def _cmd_calibrate(args) -> int:
    workers = _resolve_workers(args.workers)
    c_max = args.c_max
    if c_max is None:
        if not args.db:
            raise DomainError("calibrate needs --c-max or --db to size the candidate axis")
        c_max = len(datagen.load(args.db))
    grid = perfmodel.default_grid(c_max)
    surfaces = perfmodel.calibrate_surfaces(grid, reps=args.reps, workers=workers)
    host = perfmodel.calibrate_host(
        args.host_queries, _parse_sizes(args.host_sizes), reps=args.reps, workers=workers
    )
    perfmodel.save_model(perfmodel.PerfModel(surfaces=surfaces, host_models=(host,)), args.out)
    print(f"wrote surfaces ({len(grid.q_axis)}x{len(grid.c_axis)}, "
          f"{surfaces.noisy_points} noisy points) and host bucket |Q|={host.n_queries} to {args.out}")
    return 0


def _cmd_alpha(args) -> int:
    store = datagen.load(args.db)
    pool = datagen.load(args.pool)
    idx = build_index(store, args.m)
    workers = _resolve_workers(args.workers)
    profile = perfmodel.estimate_hit_rates(
        store, idx, pool, args.batch_size, args.d,
        num_epochs=args.num_epochs, seed=args.seed,
        max_rounds=args.max_rounds, workers=workers,
    )
    perfmodel.save_model(perfmodel.PerfModel(profile=profile), args.out)
    state = "converged" if profile.converged else "did not converge"
    print(f"hit-rate profile {state} after {profile.trials} rounds "
          f"(global rate {profile.global_rate:.6g}); wrote {args.out}")
    return 0


def _cmd_predict(args) -> int:
    store = datagen.load(args.db)
    queries = datagen.load(args.queries)
    idx = build_index(store, args.m)
    model = perfmodel.load_model(args.model)
    if model.surfaces is None or not model.host_models:
        raise FormatError(f"{args.model}: missing surfaces or host model")
    profile = model.profile
    if args.alpha:
        alpha_model = perfmodel.load_model(args.alpha)
        profile = alpha_model.profile
    if profile is None:
        raise FormatError("no hit-rate profile: supply --alpha or a combined model file")
    host = perfmodel.nearest_host_model(model.host_models, len(queries))
    sizes = _parse_sizes(args.s_candidates)
    best, predictions = perfmodel.recommend_batch_size(
        sizes, queries, store, idx, model.surfaces, profile, host, args.d
    )
    rows = [
        [p.s, p.host_seconds, p.kernel_seconds, p.total_seconds,
         p.predicted_hits, p.result_bytes]
        for p in predictions
    ]
    _write_table(
        ["s", "host_seconds", "kernel_seconds", "total_seconds", "predicted_hits", "result_bytes"],
        rows, args.out,
    )
    print(f"recommended batch size: {best}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    store = datagen.load(args.db)
    queries = datagen.load(args.queries)
    idx = build_index(store, args.m)
    workers = _resolve_workers(args.workers)
    rows = []
    for s in _parse_sizes(args.s):
        plan = periodic(queries, s, idx)
        best = None
        for _ in range(args.reps):
            result, stats = run_search(store, idx, plan, args.d, workers=workers)
            if best is None or stats.total_seconds < best[1].total_seconds:
                best = (result, stats)
        result, stats = best
        rows.append([
            s, len(plan.batches), stats.interactions_computed,
            stats.interactions_computed / len(queries), stats.hits,
            stats.kernel_seconds, stats.overhead_seconds,
            stats.assembly_seconds, stats.total_seconds,
        ])
    _write_table(
        ["s", "batches", "interactions", "interactions_per_query", "hits",
         "kernel_seconds", "overhead_seconds", "assembly_seconds", "total_seconds"],
        rows, args.out,
    )
    return 0


# ── argument wiring ─────────────────────────────────────────────────────────


def _add_common_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--db", required=True, help="entry segment CSV")
    p.add_argument("--queries", required=True, help="query segment CSV")
    p.add_argument("--d", type=float, required=True, help="distance threshold")
    p.add_argument("--m", type=int, default=DEFAULT_BIN_COUNT, help="temporal bin count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajseek",
        description="distance-threshold search over trajectory segments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset or sample query trajectories")
    p.add_argument("--profile", choices=datagen.PROFILE_KINDS, help="dataset profile")
    p.add_argument("--sample-from", help="sample whole trajectories from this CSV instead")
    p.add_argument("--trajectories", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--timesteps", type=int)
    p.add_argument("--start-window", help="lo:hi start-time window")
    p.add_argument("--normal-mean", type=float)
    p.add_argument("--normal-std", type=float)
    p.add_argument("--exp-mean", type=float)
    p.add_argument("--steps-min", type=int)
    p.add_argument("--steps-max", type=int)
    p.add_argument("--step-scale", type=float)
    p.add_argument("--arena", type=float)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("index", help="build the temporal index and report bin stats")
    p.add_argument("--db", required=True)
    p.add_argument("--m", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--extent-rule", choices=("member_extents", "grid_start"),
                   default="member_extents")
    p.add_argument("--stats", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="run an indexed batch search")
    _add_common_search_args(p)
    p.add_argument("--planner", choices=PLANNERS, required=True)
    p.add_argument("--batch-size", type=int, help="periodic batch size")
    p.add_argument("--num-batches", type=int, help="setsplit-fixed target batch count")
    p.add_argument("--min-size", type=int, help="setsplit-minmax batch floor")
    p.add_argument("--max-size", type=int, help="setsplit ceiling")
    p.add_argument("--bound", type=int, help="greedy size bound")
    p.add_argument("--workers", type=int, help=f"worker count (default: {WORKERS_ENV} or machine)")
    p.add_argument("--sorted", action="store_true", help="canonically sort the result CSV")
    p.add_argument("--out", help="result CSV (default stdout)")
    p.add_argument("--stats", help="write run stats JSON here")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("oracle", help="brute-force reference search")
    p.add_argument("--db", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--sorted", action="store_true")
    p.add_argument("--out")
    p.add_argument("--stats")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("calibrate", help="benchmark kernel surfaces and host overhead")
    p.add_argument("--out", required=True, help="model document path")
    p.add_argument("--c-max", type=int, help="largest candidate count to benchmark")
    p.add_argument("--db", help="size the candidate axis from this store instead")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--host-queries", type=int, default=4096,
                   help="query-set size bucket for the host model")
    p.add_argument("--host-sizes", default="8,16,32,64,128,256",
                   help="batch sizes for the host overhead fit")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("alpha", help="estimate per-epoch hit rates from a query pool")
    p.add_argument("--db", required=True)
    p.add_argument("--pool", required=True, help="representative query pool CSV")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--batch-size", type=int, required=True, help="sample batch size")
    p.add_argument("--m", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--num-epochs", type=int, default=perfmodel.DEFAULT_EPOCHS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=60)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_alpha)

    p = sub.add_parser("predict", help="predict response times and recommend a batch size")
    _add_common_search_args(p)
    p.add_argument("--model", required=True, help="calibration document from 'calibrate'")
    p.add_argument("--alpha", help="hit-rate profile document from 'alpha'")
    p.add_argument("--s-candidates", required=True, help="lo:hi:step or comma list")
    p.add_argument("--out", help="prediction CSV (default stdout)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("sweep", help="measure periodic-plan response times over batch sizes")
    _add_common_search_args(p)
    p.add_argument("--s", required=True, help="lo:hi:step or comma list")
    p.add_argument("--reps", type=int, default=1, help="keep the fastest of this many runs")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="sweep CSV (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, FormatError, OSError) as exc:
        print(f"trajseek: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
