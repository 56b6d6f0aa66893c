"""Exhaustive reference optimum for tiny instances.

Enumerates every ordered partition of the assets into exactly m nonempty
sequences and keeps the cheapest. Deliberately naive: this is the ground
truth the real solvers are checked against, so it must share none of their
search machinery. Guarded to small n.
"""

from __future__ import annotations

import math
import time
from itertools import permutations, product

from .model import COST_EPS, Instance, Solution, build_cost_matrix, make_route
from .exact import SolveResult, SolveStatus

DEFAULT_MAX_N = 9


def _partitions_into(items: list[int], m: int):
    """All unordered partitions of items into exactly m nonempty blocks."""
    blocks: list[list[int]] = []

    def rec(idx: int):
        if idx == len(items):
            if len(blocks) == m:
                yield [list(b) for b in blocks]
            return
        remaining = len(items) - idx
        item = items[idx]
        for b in blocks:
            if len(blocks) + remaining - 1 >= m:
                b.append(item)
                yield from rec(idx + 1)
                b.pop()
        if len(blocks) < m:
            blocks.append([item])
            yield from rec(idx + 1)
            blocks.pop()

    yield from rec(0)


def solve_bruteforce(instance: Instance, max_n: int = DEFAULT_MAX_N) -> SolveResult:
    """Optimal solution by full enumeration; refuses instances above max_n.

    Capacity-violating partitions are skipped. Ties between equally cheap
    route sets break toward the lexicographically smallest sorted route
    representation, so the result is deterministic.
    """
    t_start = time.perf_counter()
    n, m = instance.n, instance.num_drones
    if n > max_n:
        raise ValueError(f"brute force is guarded to n <= {max_n}, got n={n}")
    if m < 1:
        raise ValueError("need at least one drone")

    q = instance.demand_vector().tolist()
    costs = build_cost_matrix(instance)
    c = costs.cost.tolist()
    capacity = instance.capacity + COST_EPS

    best_cost = math.inf
    best_routes: tuple[tuple[int, ...], ...] | None = None
    evaluated = 0

    if m <= n:
        ids = [a.id for a in instance.assets]
        for blocks in _partitions_into(ids, m):
            if any(sum(q[j] for j in b) > capacity for b in blocks):
                continue
            for ordering in product(*(permutations(b) for b in blocks)):
                total = 0.0
                for seq in ordering:
                    prev = 0
                    for s in seq:
                        total += c[prev][s]
                        prev = s
                    total += c[prev][0]
                evaluated += 1
                if total < best_cost - COST_EPS:
                    best_cost = total
                    best_routes = tuple(sorted(ordering))
                elif total < best_cost + COST_EPS:
                    candidate = tuple(sorted(ordering))
                    if candidate < best_routes:
                        best_cost = min(best_cost, total)
                        best_routes = candidate

    wall = time.perf_counter() - t_start
    if best_routes is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, incumbent=None,
                           lower_bound=math.inf, nodes_explored=evaluated,
                           wall_time=wall)

    routes = tuple(make_route(instance, costs, i, stops)
                   for i, stops in enumerate(best_routes))
    total = float(sum(r.duration for r in routes))
    solution = Solution(routes=routes, total_cost=total, method="brute")
    return SolveResult(status=SolveStatus.OPTIMAL, incumbent=solution,
                       lower_bound=total, nodes_explored=evaluated,
                       wall_time=wall)
