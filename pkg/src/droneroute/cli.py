"""Command-line front end: generate instances, solve them, sweep benchmarks,
convert benchmark files. Thin shell over the library; no solver logic here.

Exit codes: 0 success, 2 usage, 3 infeasible, 4 stopped on a budget with an
incumbent, 5 I/O or format trouble.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from .bruteforce import DEFAULT_MAX_N, solve_bruteforce
from .exact import SolveConfig, SolveStatus, solve_exact
from .gnn import ClusteringInfeasibleError, solve_gnn
from .io_formats import (FormatError, parse_cvrplib, parse_instance,
                         write_instance, write_solution)
from .model import ViolationKind, validate_instance
from .scenario import (DEFAULT_AREA, DEFAULT_CAPACITY, DEFAULT_ENDURANCE,
                       DEFAULT_NUM_DRONES, DEFAULT_SPEED, DepotPlacement,
                       ScenarioConfig, default_catalog, generate_instance)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4
EXIT_IO = 5

DEFAULT_COUNTS = ("bench=3", "wheelchair=3", "ambulance=2", "playground=2")


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _parse_counts(pairs) -> list[tuple[str, int]]:
    counts = []
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise ValueError(f"counts must look like name=count, got {pair!r}")
        counts.append((name, int(value)))
    return counts


def _parse_area(text: str) -> tuple[float, float]:
    width, sep, height = text.lower().partition("x")
    if not sep:
        raise ValueError(f"area must look like WIDTHxHEIGHT, got {text!r}")
    return float(width), float(height)


def cmd_generate(args) -> int:
    try:
        counts = _parse_counts(args.counts)
        width, height = _parse_area(args.area)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)

    catalog = {t.name: t for t in default_catalog()}
    counts_per_type = []
    for name, count in counts:
        if name not in catalog:
            return _fail(f"unknown asset type {name!r}; known: "
                         f"{', '.join(sorted(catalog))}", EXIT_USAGE)
        counts_per_type.append((catalog[name], count))

    depot = DepotPlacement.CORNER
    depot_x = depot_y = None
    if args.depot == "center":
        depot = DepotPlacement.CENTER
    elif args.depot not in ("corner", "center"):
        try:
            depot_x, depot_y = (float(v) for v in args.depot.split(","))
        except ValueError:
            return _fail(f"depot must be corner, center or X,Y, got "
                         f"{args.depot!r}", EXIT_USAGE)
        depot = DepotPlacement.EXPLICIT

    config = ScenarioConfig(
        seed=args.seed, counts_per_type=tuple(counts_per_type),
        area_width=width, area_height=height, depot=depot,
        depot_x=depot_x, depot_y=depot_y, num_drones=args.drones,
        capacity=args.capacity, speed=args.speed, endurance=args.endurance)
    try:
        instance = generate_instance(config)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)

    if instance.num_drones > instance.n:
        return _fail(f"m={instance.num_drones} drones exceed n={instance.n} "
                     "assets; the routing model needs m <= n", EXIT_USAGE)
    violations = validate_instance(instance)
    hard = [v for v in violations
            if v.kind is not ViolationKind.ENDURANCE_EXCEEDED_WARNING]
    if hard:
        for v in hard:
            print(f"violation: {v.kind.value}: {v.detail}", file=sys.stderr)
        return _fail("generated instance is invalid", EXIT_USAGE)

    try:
        _write_text(args.out, write_instance(instance))
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    print(f"generated n={instance.n} assets for m={instance.num_drones} drones "
          f"(seed {args.seed}); total demand "
          f"{instance.total_demand():.6g}/{instance.num_drones * instance.capacity:.6g} L; "
          "instance valid", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        instance = parse_instance(_read_text(args.input))
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except FormatError as exc:
        return _fail(f"cannot parse instance: {exc}", EXIT_IO)

    if args.method == "brute" and instance.n > DEFAULT_MAX_N:
        return _fail(f"brute force is guarded to n <= {DEFAULT_MAX_N}; "
                     f"this instance has n={instance.n}", EXIT_USAGE)

    meta: dict = {}
    try:
        if args.method == "exact":
            config = SolveConfig(time_limit=args.time_limit,
                                 gap_tolerance=args.gap)
            result = solve_exact(instance, config)
            status = result.status.value
            solution = result.incumbent
            meta = {"status": status, "nodes": result.nodes_explored,
                    "wall_time": result.wall_time,
                    "lower_bound": result.lower_bound}
        elif args.method == "brute":
            result = solve_bruteforce(instance)
            status = result.status.value
            solution = result.incumbent
            meta = {"status": status, "nodes": result.nodes_explored,
                    "wall_time": result.wall_time,
                    "lower_bound": result.lower_bound}
        elif args.method == "gnn":
            t0 = time.perf_counter()
            solution = solve_gnn(instance)
            status = "feasible"
            meta = {"status": status,
                    "wall_time": time.perf_counter() - t0}
        else:  # pragma: no cover - argparse restricts choices
            return _fail(f"unknown method {args.method!r}", EXIT_USAGE)
    except ClusteringInfeasibleError as exc:
        return _fail(f"infeasible: {exc}", EXIT_INFEASIBLE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)

    if solution is None:
        print(f"method={args.method} status={status} cost=- "
              f"wall_time={meta.get('wall_time', 0.0):.6f}", file=sys.stderr)
        if status == SolveStatus.INFEASIBLE.value:
            return EXIT_INFEASIBLE
        return EXIT_BUDGET

    try:
        _write_text(args.out, write_solution(solution, instance, meta))
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    print(f"method={args.method} status={status} "
          f"cost={solution.total_cost:.6f} "
          f"wall_time={meta.get('wall_time', 0.0):.6f}", file=sys.stderr)
    if status in ("optimal", "feasible"):
        return EXIT_OK
    if status == SolveStatus.INFEASIBLE.value:
        return EXIT_INFEASIBLE
    return EXIT_BUDGET


def _experiment_from_config_file(path: str) -> bench_mod.ExperimentConfig:
    doc = json.loads(_read_text(path))
    base_doc = doc.get("base", {})
    catalog = default_catalog()
    base = ScenarioConfig(
        seed=base_doc.get("seed", 0),
        counts_per_type=tuple((t, 0) for t in catalog),
        area_width=base_doc.get("area_width", DEFAULT_AREA),
        area_height=base_doc.get("area_height", DEFAULT_AREA),
        num_drones=base_doc.get("num_drones", DEFAULT_NUM_DRONES),
        capacity=base_doc.get("capacity", DEFAULT_CAPACITY),
        speed=base_doc.get("speed", DEFAULT_SPEED),
        endurance=base_doc.get("endurance", DEFAULT_ENDURANCE))
    return bench_mod.ExperimentConfig(
        n_values=tuple(doc["n_values"]),
        base=base,
        runs_per_n=doc.get("runs_per_n"),
        methods=tuple(doc.get("methods", ("exact", "gnn"))),
        exact_time_limit=doc.get("exact_time_limit", 60.0),
        jobs=doc.get("jobs", 1))


def cmd_bench(args) -> int:
    try:
        if args.config:
            config = _experiment_from_config_file(args.config)
            if args.jobs is not None:
                config = dataclasses.replace(config, jobs=args.jobs)
        else:
            catalog = default_catalog()
            base = ScenarioConfig(seed=args.seed,
                                  counts_per_type=tuple((t, 0) for t in catalog),
                                  num_drones=args.drones)
            config = bench_mod.ExperimentConfig(
                n_values=tuple(int(v) for v in args.n_values.split(",")),
                base=base,
                runs_per_n=args.runs,
                methods=tuple(args.methods.split(",")),
                exact_time_limit=args.time_limit,
                jobs=args.jobs if args.jobs is not None else os.cpu_count() or 1)
    except (KeyError, ValueError, OSError) as exc:
        return _fail(f"bad benchmark configuration: {exc}", EXIT_USAGE)

    records = bench_mod.run_comparison(config)
    statuses = sorted({r.status for r in records})
    try:
        files = []
        for fmt in ("csv", "table_text", "svg_plots"):
            files.extend(bench_mod.emit_report(records, fmt, args.outdir))
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    print(f"ran {len(records)} records over n in {list(config.n_values)}; "
          f"statuses seen: {', '.join(statuses)}", file=sys.stderr)
    for path in files:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.source_format != "cvrplib":
        return _fail(f"unsupported source format {args.source_format!r}",
                     EXIT_USAGE)
    try:
        instance = parse_cvrplib(_read_text(args.input), num_drones=args.drones)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except FormatError as exc:
        return _fail(f"cannot convert: {exc}", EXIT_IO)
    try:
        _write_text(args.out, write_instance(instance))
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    print(f"converted n={instance.n} customers, m={instance.num_drones} "
          f"vehicles, capacity {instance.capacity:g}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drone-route",
        description="Capacitated drone-routing: generate, solve, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--counts", nargs="+", default=list(DEFAULT_COUNTS),
                     metavar="TYPE=COUNT")
    gen.add_argument("--area", default=f"{DEFAULT_AREA:g}x{DEFAULT_AREA:g}")
    gen.add_argument("--depot", default="corner",
                     help="corner, center or explicit X,Y")
    gen.add_argument("--drones", "--m", dest="drones", type=int,
                     default=DEFAULT_NUM_DRONES)
    gen.add_argument("--capacity", "--Q", dest="capacity", type=float,
                     default=DEFAULT_CAPACITY)
    gen.add_argument("--speed", "--V", dest="speed", type=float,
                     default=DEFAULT_SPEED)
    gen.add_argument("--endurance", type=float, default=DEFAULT_ENDURANCE)
    gen.add_argument("--out", default="-")
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("--in", dest="input", required=True)
    solve.add_argument("--method", choices=("exact", "gnn", "brute"),
                       required=True)
    solve.add_argument("--time-limit", type=float, default=60.0)
    solve.add_argument("--gap", type=float, default=0.0)
    solve.add_argument("--out", default="-")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="run a benchmark sweep")
    bench.add_argument("--config", help="JSON file mirroring ExperimentConfig")
    bench.add_argument("--outdir", required=True)
    bench.add_argument("--n-values", default="10,15,20")
    bench.add_argument("--runs", type=int, default=None)
    bench.add_argument("--methods", default="exact,gnn")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--drones", "--m", dest="drones", type=int,
                       default=DEFAULT_NUM_DRONES)
    bench.add_argument("--time-limit", type=float, default=60.0)
    bench.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default: all cores)")
    bench.set_defaults(func=cmd_bench)

    conv = sub.add_parser("convert", help="convert a benchmark file")
    conv.add_argument("--from", dest="source_format", required=True,
                      choices=("cvrplib",))
    conv.add_argument("--in", dest="input", required=True)
    conv.add_argument("--out", default="-")
    conv.add_argument("--drones", "--m", dest="drones", type=int, default=None,
                      help="override the file's vehicle count")
    conv.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(str(exc), EXIT_IO)


def entry() -> None:  # console-script hook
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
