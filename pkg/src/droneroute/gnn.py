"""Two-phase routing heuristic: capacity-aware median clustering followed by
greedy nearest-neighbor sequencing of each cluster.

Phase 1 picks K median assets and assigns every asset to exactly one open
median, minimizing total assignment cost while keeping each cluster's
demand within one drone's tank. Small instances are clustered exactly by
enumerating median subsets; larger ones use farthest-point seeding plus
single-median swap descent. Phase 2 flies each drone depot -> median, then
repeatedly to the cheapest unvisited cluster member, then home.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import (COST_EPS, CostMatrix, Instance, Route, Solution,
                    ViolationKind, build_cost_matrix, make_route,
                    validate_instance)

# Above this size phase 1 switches from exact subset enumeration to local search.
EXACT_CLUSTERING_MAX_N = 20


class ClusteringInfeasibleError(ValueError):
    """No K-way clustering fits the drone capacity; use more drones or a
    bigger tank."""


@dataclass(frozen=True)
class Clustering:
    """A K-way partition of assets around chosen median assets."""

    k: int
    medians: tuple[int, ...]
    assignment: dict[int, int]          # asset id -> median id
    per_cluster_demand: dict[int, float]

    def members(self, median: int) -> tuple[int, ...]:
        return tuple(sorted(j for j, i in self.assignment.items() if i == median))


def clustering_objective(costs: CostMatrix, clustering: Clustering) -> float:
    """Total assignment cost, medians included (their own service time)."""
    c = costs.cost
    return float(sum(c[i, j] for j, i in clustering.assignment.items()))


def _greedy_assignment(c, demand, capacity, medians, points):
    """Best-fit assignment, heaviest points first; None when it gets stuck."""
    loads = {i: demand[i] for i in medians}
    assign = {i: i for i in medians}
    obj = sum(c[i][i] for i in medians)
    for p in sorted(points, key=lambda p: (-demand[p], p)):
        feasible = [i for i in medians if loads[i] + demand[p] <= capacity + COST_EPS]
        if not feasible:
            return None
        best = min(feasible, key=lambda i: (c[i][p], i))
        assign[p] = best
        loads[best] += demand[p]
        obj += c[best][p]
    return obj, assign


def _optimal_assignment(c, demand, capacity, medians, points, cutoff):
    """Exact capacitated assignment of points to fixed medians.

    Returns the cheapest feasible assignment strictly below ``cutoff``, or
    None. With an infinite cutoff, None means no feasible assignment exists.
    """
    medians = sorted(medians)
    order = sorted(points, key=lambda p: (-demand[p], p))
    k = len(order)
    min_cost = [min(c[i][p] for i in medians) for p in order]
    suffix_cost = [0.0] * (k + 1)
    suffix_dem = [0.0] * (k + 1)
    for t in range(k - 1, -1, -1):
        suffix_cost[t] = suffix_cost[t + 1] + min_cost[t]
        suffix_dem[t] = suffix_dem[t + 1] + demand[order[t]]

    base = sum(c[i][i] for i in medians)
    best_obj = cutoff
    best_assign = None
    loads = {i: demand[i] for i in medians}
    assign = {i: i for i in medians}

    def dfs(t, obj):
        nonlocal best_obj, best_assign
        if obj + suffix_cost[t] >= best_obj - 1e-12:
            return
        residual = sum(capacity - loads[i] for i in medians)
        if suffix_dem[t] > residual + COST_EPS:
            return
        if t == k:
            best_obj = obj
            best_assign = dict(assign)
            return
        p = order[t]
        for i in sorted(medians, key=lambda i: (c[i][p], i)):
            if loads[i] + demand[p] > capacity + COST_EPS:
                continue
            loads[i] += demand[p]
            assign[p] = i
            dfs(t + 1, obj + c[i][p])
            del assign[p]
            loads[i] -= demand[p]

    dfs(0, base)
    if best_assign is None:
        return None
    return best_obj, best_assign


def _nearest_assignment(c, demand, capacity, medians, points):
    """Uncapacitated optimum (everything to its cheapest median); returns
    (obj, assign) when it happens to respect capacity, else None."""
    loads = {i: demand[i] for i in medians}
    assign = {i: i for i in medians}
    obj = sum(c[i][i] for i in medians)
    for p in points:
        best = min(medians, key=lambda i: (c[i][p], i))
        assign[p] = best
        loads[best] += demand[p]
        obj += c[best][p]
    if any(load > capacity + COST_EPS for load in loads.values()):
        return None
    return obj, assign


def _cluster_exact(c, c_arr, demand, capacity, n, k, seed):
    """Enumerate all median subsets, cheapest-possible first."""
    ids = list(range(1, n + 1))
    best_obj, best_medians, best_assign = seed if seed else (math.inf, None, None)

    combos = list(itertools.combinations(ids, k))
    bounds = np.empty(len(combos))
    chunk = 50_000
    cols = np.arange(1, n + 1)
    for lo in range(0, len(combos), chunk):
        batch = np.array(combos[lo:lo + chunk])
        sub = c_arr[batch[:, :, None], cols[None, None, :]]
        bounds[lo:lo + len(batch)] = sub.min(axis=1).sum(axis=1)

    for idx in np.argsort(bounds, kind="stable"):
        if bounds[idx] >= best_obj - 1e-12:
            break
        medians = list(combos[idx])
        points = [j for j in ids if j not in combos[idx]]
        result = _nearest_assignment(c, demand, capacity, medians, points)
        if result is None:
            result = _optimal_assignment(c, demand, capacity, medians, points,
                                         best_obj)
        if result is not None and result[0] < best_obj - 1e-12:
            best_obj, best_medians, best_assign = result[0], tuple(medians), result[1]
    if best_assign is None:
        raise ClusteringInfeasibleError(
            f"no {k}-way clustering fits capacity {capacity}; increase the "
            "cluster count or the drone capacity")
    return best_medians, best_assign


def _farthest_point_medians(c, n, k):
    ids = list(range(1, n + 1))
    first = min(ids, key=lambda i: (sum(c[i][j] for j in ids), i))
    medians = [first]
    while len(medians) < k:
        nxt = max((j for j in ids if j not in medians),
                  key=lambda j: (min(c[i][j] for i in medians), -j))
        medians.append(nxt)
    return sorted(medians)


def _cluster_local(c, demand, capacity, n, k):
    """Farthest-point seeding plus single-median swap descent."""
    ids = list(range(1, n + 1))
    medians = _farthest_point_medians(c, n, k)

    def assignment_for(med):
        points = [j for j in ids if j not in med]
        res = _greedy_assignment(c, demand, capacity, med, points)
        return res

    current = assignment_for(medians)
    if current is None:
        # Greedy can wedge on tight demands; fall back to the exact
        # assignment, then to capacity-heavy seeding.
        points = [j for j in ids if j not in medians]
        current = _optimal_assignment(c, demand, capacity, medians, points, math.inf)
    if current is None:
        medians = sorted(sorted(ids, key=lambda i: (-demand[i], i))[:k])
        points = [j for j in ids if j not in medians]
        current = _greedy_assignment(c, demand, capacity, medians, points) \
            or _optimal_assignment(c, demand, capacity, medians, points, math.inf)
    if current is None:
        raise ClusteringInfeasibleError(
            f"no {k}-way clustering fits capacity {capacity}; increase the "
            "cluster count or the drone capacity")

    obj, assign = current
    improved = True
    while improved:
        improved = False
        best_swap = None
        for out in sorted(medians):
            for inn in ids:
                if inn in medians:
                    continue
                cand = sorted(set(medians) - {out} | {inn})
                res = _greedy_assignment(c, demand, capacity, cand,
                                         [j for j in ids if j not in cand])
                if res is None or res[0] >= obj - 1e-12:
                    continue
                if best_swap is None or (res[0], tuple(cand)) < (best_swap[0],
                                                                 best_swap[1]):
                    best_swap = (res[0], tuple(cand), res[1])
        if best_swap is not None:
            obj, assign = best_swap[0], best_swap[2]
            medians = list(best_swap[1])
            improved = True
    return tuple(sorted(medians)), assign


def cluster_assets(instance: Instance, costs: CostMatrix, k: int) -> Clustering:
    """Partition the assets into K capacity-feasible clusters around K median
    assets, minimizing total median-to-member cost.

    Exact for small instances (subset enumeration with optimal capacitated
    assignment), local search beyond EXACT_CLUSTERING_MAX_N assets.
    """
    n = instance.n
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} must be between 1 and n={n}")
    c = costs.cost.tolist()
    demand = instance.demand_vector().tolist()
    if any(demand[j] > instance.capacity + COST_EPS for j in range(1, n + 1)):
        raise ClusteringInfeasibleError(
            "an asset demands more than one drone carries")

    if n <= EXACT_CLUSTERING_MAX_N:
        try:
            seed_m, seed_a = _cluster_local(c, demand, instance.capacity, n, k)
            seed_obj = sum(c[i][j] for j, i in seed_a.items())
            seed = (seed_obj, seed_m, seed_a)
        except ClusteringInfeasibleError:
            seed = None
        medians, assign = _cluster_exact(c, np.asarray(costs.cost), demand,
                                         instance.capacity, n, k, seed)
    else:
        medians, assign = _cluster_local(c, demand, instance.capacity, n, k)

    per_cluster = {i: 0.0 for i in medians}
    for j, i in assign.items():
        per_cluster[i] += demand[j]
    return Clustering(k=k, medians=tuple(sorted(medians)), assignment=assign,
                      per_cluster_demand=per_cluster)


def route_cluster(instance: Instance, costs: CostMatrix, cluster, median: int,
                  drone_id: int = 0) -> Route:
    """Sequence one cluster: depot to its median first, then always the
    cheapest unvisited member, then back to the depot."""
    members = set(cluster)
    if not members:
        raise ValueError("cannot route an empty cluster")
    if median not in members:
        raise ValueError(f"median {median} is not a member of the cluster")
    demand = instance.demand_vector()
    load = float(sum(demand[j] for j in members))
    if load > instance.capacity + COST_EPS:
        raise ValueError(f"cluster demand {load:.6g} exceeds drone capacity "
                         f"{instance.capacity:.6g}")

    c = costs.cost
    stops = [median]
    remaining = members - {median}
    while remaining:
        here = stops[-1]
        nxt = min(remaining, key=lambda j: (c[here, j], j))
        stops.append(nxt)
        remaining.discard(nxt)
    return make_route(instance, costs, drone_id, tuple(stops))


def solve_gnn(instance: Instance) -> Solution:
    """Full two-phase heuristic: cluster with K = fleet size, route each
    cluster, label drones in median-id order. Always feasible when
    clustering succeeds, and deterministic."""
    violations = [v for v in validate_instance(instance)
                  if v.kind is not ViolationKind.ENDURANCE_EXCEEDED_WARNING]
    capacity_bad = [v for v in violations
                    if v.kind is ViolationKind.CAPACITY_EXCEEDED]
    structural = [v for v in violations
                  if v.kind is not ViolationKind.CAPACITY_EXCEEDED]
    if structural:
        raise ValueError("instance fails validation: "
                         + "; ".join(v.detail for v in structural))
    if capacity_bad:
        raise ClusteringInfeasibleError(capacity_bad[0].detail)
    if instance.num_drones > instance.n:
        raise ValueError(f"m={instance.num_drones} > n={instance.n}: every "
                         "drone needs at least one asset")

    costs = build_cost_matrix(instance)
    clustering = cluster_assets(instance, costs, instance.num_drones)
    routes = []
    for drone_id, median in enumerate(clustering.medians):
        routes.append(route_cluster(instance, costs,
                                    clustering.members(median), median,
                                    drone_id=drone_id))
    total = float(sum(r.duration for r in routes))
    return Solution(routes=tuple(routes), total_cost=total, method="gnn")
