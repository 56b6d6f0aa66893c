"""Desk-scale reproduction of the runtime and travel-time experiments.

Every method inside one (n, run) cell solves the identical generated
instance (paired seeds), so cost differences reflect the methods alone.
Absolute runtimes depend on this machine; only trends and order relations
are meaningful, and the report recomputes everything from the records.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bruteforce import solve_bruteforce
from .exact import SolveConfig, SolveStatus, solve_exact
from .gnn import ClusteringInfeasibleError, solve_gnn
from .model import Instance
from .scenario import ScenarioConfig, generate_instance, spread_counts

CSV_HEADER = ["n", "run", "method", "cost_s", "wall_time_s", "status", "seed"]
SVG_NAMES = ("runtime_vs_n.svg", "cost_cdf.svg", "cost_vs_n.svg")
METHODS = ("exact", "gnn", "brute")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: which sizes, how many paired runs, which solvers."""

    n_values: tuple[int, ...]
    base: ScenarioConfig
    runs_per_n: int | None = None        # None: 30 up to n=20, 10 beyond
    methods: tuple[str, ...] = ("exact", "gnn")
    exact_time_limit: float = 60.0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}")
        if self.runs_per_n is not None and self.runs_per_n < 1:
            raise ValueError("runs_per_n must be at least 1")

    def runs_for(self, n: int) -> int:
        if self.runs_per_n is not None:
            return self.runs_per_n
        return 30 if n <= 20 else 10


@dataclass(frozen=True)
class RunRecord:
    n: int
    run: int
    method: str
    cost: float | None       # absent when the run produced no incumbent
    wall_time: float
    status: str
    seed: int


def derive_seed(base_seed: int, n: int, run: int) -> int:
    """Deterministic per-cell seed from the sweep seed and cell coordinates."""
    seq = np.random.SeedSequence((base_seed, n, run))
    return int(seq.generate_state(1, np.uint64)[0])


def cell_config(config: ExperimentConfig, n: int, run: int) -> ScenarioConfig:
    """The scenario for one cell: n assets spread round-robin over the base
    catalog, with the cell-derived seed."""
    catalog = tuple(t for t, _ in config.base.counts_per_type)
    return dataclasses.replace(config.base,
                               seed=derive_seed(config.base.seed, n, run),
                               counts_per_type=spread_counts(catalog, n))


def _run_method(instance: Instance, method: str, exact_time_limit: float):
    """Solve one instance with one method; wall time wraps the solve only."""
    t0 = time.perf_counter()
    try:
        if method == "exact":
            result = solve_exact(instance, SolveConfig(time_limit=exact_time_limit))
            wall = time.perf_counter() - t0
            cost = result.incumbent.total_cost if result.incumbent else None
            return cost, wall, result.status.value
        if method == "gnn":
            solution = solve_gnn(instance)
            return solution.total_cost, time.perf_counter() - t0, "feasible"
        if method == "brute":
            result = solve_bruteforce(instance)
            wall = time.perf_counter() - t0
            cost = result.incumbent.total_cost if result.incumbent else None
            return cost, wall, result.status.value
        raise ValueError(f"unknown method {method!r}")
    except ClusteringInfeasibleError:
        return None, time.perf_counter() - t0, "infeasible"
    except Exception:
        return None, time.perf_counter() - t0, "error"


def _run_cell(args) -> list[RunRecord]:
    config, n, run = args
    scenario = cell_config(config, n, run)
    instance = generate_instance(scenario)
    records = []
    for method in config.methods:
        cost, wall, status = _run_method(instance, method,
                                         config.exact_time_limit)
        records.append(RunRecord(n=n, run=run, method=method, cost=cost,
                                 wall_time=wall, status=status,
                                 seed=scenario.seed))
    return records


def run_comparison(config: ExperimentConfig) -> list[RunRecord]:
    """Run the sweep; per-run solver failures land in the record status and
    never abort the sweep. Output order is (n, run, method) regardless of
    the worker count."""
    cells = [(config, n, run)
             for n in config.n_values
             for run in range(config.runs_for(n))]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_cell = list(pool.map(_run_cell, cells))
    else:
        per_cell = [_run_cell(cell) for cell in cells]
    records = [record for cell in per_cell for record in cell]
    return sorted(records, key=lambda r: (r.n, r.run, r.method))


def compute_cdf(samples: list[float]) -> list[tuple[float, float]]:
    """Empirical distribution: step points at sorted sample values with
    cumulative fractions k/N."""
    if not samples:
        raise ValueError("cannot build a CDF from zero samples")
    ordered = sorted(samples)
    total = len(ordered)
    points = []
    for k, value in enumerate(ordered, start=1):
        if k == total or ordered[k] != value:
            points.append((value, k / total))
    return points


def _costs_for_cdf(records: list[RunRecord], method: str) -> list[float]:
    # The "optimal scheme" curve must not mix in timeout incumbents.
    return [r.cost for r in records
            if r.method == method and r.cost is not None
            and (method != "exact" or r.status == SolveStatus.OPTIMAL.value)]


def cdf_plot_data(records: list[RunRecord]):
    """CDF series per method at the best-covered n (ties go to the largest)."""
    counts: dict[int, int] = {}
    for r in records:
        counts[r.n] = counts.get(r.n, 0) + 1
    n_star = max(counts, key=lambda n: (counts[n], n))
    at_n = [r for r in records if r.n == n_star]
    series = {}
    for method in sorted({r.method for r in at_n}):
        samples = _costs_for_cdf(at_n, method)
        if samples:
            series[method] = compute_cdf(samples)
    return n_star, series


def runtime_plot_data(records: list[RunRecord]):
    """Raw wall times per method, exactly the values in the CSV."""
    series: dict[str, tuple[list[int], list[float]]] = {}
    for r in records:
        xs, ys = series.setdefault(r.method, ([], []))
        xs.append(r.n)
        ys.append(r.wall_time)
    return series


def cost_stats_data(records: list[RunRecord]):
    """Per (method, n): mean cost with min/max extremes over produced costs."""
    stats: dict[str, list[tuple[int, float, float, float]]] = {}
    for method in sorted({r.method for r in records}):
        rows = []
        for n in sorted({r.n for r in records}):
            costs = [r.cost for r in records
                     if r.method == method and r.n == n and r.cost is not None]
            if costs:
                rows.append((n, sum(costs) / len(costs), min(costs), max(costs)))
        stats[method] = rows
    return stats


def _write_csv(records: list[RunRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.n, r.run, r.method,
                "" if r.cost is None else format(r.cost, ".17g"),
                format(r.wall_time, ".17g"), r.status, r.seed,
            ])


def _write_table(records: list[RunRecord], path: Path) -> None:
    out = io.StringIO()
    out.write(f"{'n':>4} {'method':<8} {'runs':>5} {'mean_cost_s':>14} "
              f"{'min_cost_s':>14} {'max_cost_s':>14} {'median_wall_s':>14}\n")
    for n in sorted({r.n for r in records}):
        for method in sorted({r.method for r in records}):
            cell = [r for r in records if r.n == n and r.method == method]
            if not cell:
                continue
            costs = [r.cost for r in cell if r.cost is not None]
            walls = sorted(r.wall_time for r in cell)
            median_wall = walls[len(walls) // 2]
            if costs:
                out.write(f"{n:>4} {method:<8} {len(cell):>5} "
                          f"{sum(costs) / len(costs):>14.3f} {min(costs):>14.3f} "
                          f"{max(costs):>14.3f} {median_wall:>14.6f}\n")
            else:
                out.write(f"{n:>4} {method:<8} {len(cell):>5} "
                          f"{'-':>14} {'-':>14} {'-':>14} {median_wall:>14.6f}\n")
    path.write_text(out.getvalue())


def _write_svgs(records: list[RunRecord], outdir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "droneroute"

    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, (xs, ys) in sorted(runtime_plot_data(records).items()):
        ax.scatter(xs, ys, s=14, alpha=0.6, label=method)
    ax.set_yscale("log")
    ax.set_xlabel("number of assets")
    ax.set_ylabel("wall time [s]")
    ax.set_title("Solver runtime vs problem size")
    ax.legend()
    path = outdir / SVG_NAMES[0]
    fig.savefig(path, format="svg")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    n_star, series = cdf_plot_data(records)
    for method, points in sorted(series.items()):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.step(xs, ys, where="post", label=method)
    ax.set_xlabel("total travel time [s]")
    ax.set_ylabel("cumulative fraction of runs")
    ax.set_title(f"Cost distribution at n={n_star}")
    ax.legend()
    path = outdir / SVG_NAMES[1]
    fig.savefig(path, format="svg")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, rows in sorted(cost_stats_data(records).items()):
        xs = [row[0] for row in rows]
        means = [row[1] for row in rows]
        lows = [row[1] - row[2] for row in rows]
        highs = [row[3] - row[1] for row in rows]
        ax.errorbar(xs, means, yerr=[lows, highs], marker="o", capsize=3,
                    label=method)
    ax.set_xlabel("number of assets")
    ax.set_ylabel("mean total travel time [s]")
    ax.set_title("Mean cost vs problem size (min/max whiskers)")
    ax.legend()
    path = outdir / SVG_NAMES[2]
    fig.savefig(path, format="svg")
    plt.close(fig)
    paths.append(path)
    return paths


def emit_report(records: list[RunRecord], fmt: str, outdir) -> list[Path]:
    """Write one report format (table_text, csv or svg_plots) into outdir."""
    if not records:
        raise ValueError("no records to report")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.n, r.run, r.method))
    if fmt == "csv":
        path = outdir / "report.csv"
        _write_csv(ordered, path)
        return [path]
    if fmt == "table_text":
        path = outdir / "report.txt"
        _write_table(ordered, path)
        return [path]
    if fmt == "svg_plots":
        return _write_svgs(ordered, outdir)
    raise ValueError(f"unknown report format {fmt!r}")
