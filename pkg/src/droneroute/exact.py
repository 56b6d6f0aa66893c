"""Optimal routing by combinatorial branch and bound.

The search constructs routes sequentially, one arc at a time, and prunes
with an admissible assignment-relaxation bound: the arcs still to be fixed
form a perfect matching between "tail" nodes (current position, unvisited
assets, future depot departures) and "head" nodes (unvisited assets, depot
returns), so the optimal matching cost never exceeds the best completion.
Feasibility of every incumbent is cross-checked against the integer program.

Routes are opened in increasing order of their first stop, which removes
the m! relabeling symmetry of a homogeneous fleet without losing any
visiting order.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import (COST_EPS, CostMatrix, Instance, Solution, ViolationKind,
                    build_cost_matrix, make_route, validate_instance)
from .mip import build_cvrp_model, encode_solution, verify_assignment

# Strict-improvement margin for incumbent updates and pruning.
_TIE_EPS = 1e-12


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE_TIMEOUT = "feasible_timeout"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"


@dataclass(frozen=True)
class SolveConfig:
    time_limit: float = 60.0
    gap_tolerance: float = 0.0
    node_limit: int | None = None
    branching: str = "best_first"  # or "depth_first"
    warm_start: bool = True        # seed the incumbent from the heuristic

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.gap_tolerance < 0:
            raise ValueError("gap_tolerance must be nonnegative")
        if self.branching not in ("best_first", "depth_first"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    incumbent: Solution | None
    lower_bound: float
    nodes_explored: int
    wall_time: float


class _Context:
    """Shared immutable arrays for one solve."""

    def __init__(self, instance: Instance, costs: CostMatrix):
        self.instance = instance
        self.n = instance.n
        self.m = instance.num_drones
        self.capacity = instance.capacity
        self.cost = np.asarray(costs.cost)
        self.cost_rows = self.cost.tolist()  # python lists: fast scalar reads
        self.demand = instance.demand_vector()
        self.demand_list = self.demand.tolist()
        self.total_demand = float(self.demand.sum())
        self.costs = costs


@dataclass(frozen=True, eq=False)
class PartialState:
    """A node of the search tree: some routes closed, at most one open."""

    ctx: _Context
    closed: tuple[tuple[int, ...], ...]
    open_route: tuple[int, ...]
    visited_mask: int
    cost: float
    open_load: float
    last_first: int          # first stop of the most recently opened route
    unvisited_demand: float

    @property
    def closed_count(self) -> int:
        return len(self.closed)

    def unvisited(self) -> list[int]:
        mask = self.visited_mask
        return [j for j in range(1, self.ctx.n + 1) if not mask & (1 << j)]

    def is_terminal(self) -> bool:
        full = (1 << (self.ctx.n + 1)) - 2  # bits 1..n
        return (self.visited_mask == full and not self.open_route
                and self.closed_count == self.ctx.m)


def root_state(instance: Instance, costs: CostMatrix | None = None) -> PartialState:
    if costs is None:
        costs = build_cost_matrix(instance)
    ctx = _Context(instance, costs)
    return PartialState(ctx=ctx, closed=(), open_route=(), visited_mask=0,
                        cost=0.0, open_load=0.0, last_first=0,
                        unvisited_demand=ctx.total_demand)


def state_from_solution(instance: Instance, solution: Solution,
                        costs: CostMatrix | None = None) -> PartialState:
    """The terminal search state corresponding to a complete solution."""
    if costs is None:
        costs = build_cost_matrix(instance)
    ctx = _Context(instance, costs)
    routes = sorted((tuple(r.stops) for r in solution.routes if r.stops))
    mask = 0
    for stops in routes:
        for s in stops:
            mask |= 1 << s
    total = float(sum(r.duration for r in solution.routes))
    last_first = routes[-1][0] if routes else 0
    return PartialState(ctx=ctx, closed=tuple(routes), open_route=(),
                        visited_mask=mask, cost=total, open_load=0.0,
                        last_first=last_first, unvisited_demand=0.0)


def _head_minima(ctx: _Context, unvisited: list[int]) -> tuple[list[float], float]:
    """For each unvisited head h: the cheapest arc into h from the depot or
    any other unvisited asset. Returns the per-head minima and their sum."""
    c = ctx.cost
    u = np.array(unvisited)
    rows = np.concatenate(([0], u))
    sub = c[rows[:, None], u[None, :]].copy()
    sub[np.arange(len(u)) + 1, np.arange(len(u))] = math.inf  # no self-entry
    minima = sub.min(axis=0)
    return minima.tolist(), float(minima.sum())


def _cheap_bound(state: PartialState) -> float:
    """Fast admissible bound: per-head minima plus cheapest return legs."""
    ctx = state.ctx
    unvisited = state.unvisited()
    opened = bool(state.open_route)
    returns_needed = ctx.m - state.closed_count
    if not unvisited:
        if not opened:
            return state.cost
        return state.cost + float(ctx.cost[state.open_route[-1], 0])

    residual = ((ctx.capacity - state.open_load) if opened else 0.0) \
        + (ctx.m - state.closed_count - (1 if opened else 0)) * ctx.capacity
    if state.unvisited_demand > residual + COST_EPS:
        return math.inf

    c = ctx.cost
    u = np.array(unvisited)
    tails = [0] + ([state.open_route[-1]] if opened else []) + unvisited
    rows = np.array(tails)
    sub = c[rows[:, None], u[None, :]].copy()
    fixed = 1 + (1 if opened else 0)
    sub[np.arange(len(u)) + fixed, np.arange(len(u))] = math.inf  # no self-entry
    incoming = float(sub.min(axis=0).sum())

    return_tails = ([state.open_route[-1]] if opened else []) + unvisited
    legs = np.sort(c[return_tails, 0])
    returns = float(legs[:returns_needed].sum())
    return state.cost + incoming + returns


def lower_bound(state: PartialState) -> float:
    """Admissible lower bound on the best completion of a partial state.

    Solves the assignment relaxation of the remaining arcs; on a completed
    state this is exactly the accumulated cost.
    """
    ctx = state.ctx
    unvisited = state.unvisited()
    opened = bool(state.open_route)
    n_closed = state.closed_count
    r_ret = ctx.m - n_closed
    if not unvisited and not opened:
        return state.cost
    if not unvisited and opened:
        if r_ret == 1:
            return state.cost + float(ctx.cost[state.open_route[-1], 0])
        return math.inf  # future routes would have nothing to serve

    residual = ((ctx.capacity - state.open_load) if opened else 0.0) \
        + (ctx.m - n_closed - (1 if opened else 0)) * ctx.capacity
    if state.unvisited_demand > residual + COST_EPS:
        return math.inf

    c = ctx.cost
    ku = len(unvisited)
    r_open = ctx.m - n_closed - (1 if opened else 0)
    size = ku + r_ret
    u = np.array(unvisited)
    heads = np.concatenate((u, np.zeros(r_ret, dtype=u.dtype)))

    asset_tails = ([state.open_route[-1]] if opened else []) + unvisited
    tails = np.array(asset_tails)
    mat = np.empty((size, size))
    mat[:len(asset_tails)] = c[tails[:, None], heads[None, :]]
    offset = 1 if opened else 0
    mat[np.arange(ku) + offset, np.arange(ku)] = math.inf  # no self-entry
    if r_open:
        depot_row = np.where(u > state.last_first, c[0, u], math.inf)
        mat[len(asset_tails):, :ku] = depot_row[None, :]
        mat[len(asset_tails):, ku:] = math.inf  # a route must serve something
    try:
        rows, cols = linear_sum_assignment(mat)
    except ValueError:
        return math.inf
    extra = float(mat[rows, cols].sum())
    if not math.isfinite(extra):
        return math.inf
    return state.cost + extra


def _expand(state: PartialState) -> list[tuple[float, PartialState]]:
    """All children of a node with their cheap admissible bounds.

    After any transition the candidate tails for every remaining head are
    the depot plus the still-unvisited assets, so the per-head minima and
    return-leg sums are shared across siblings and computed once here.
    """
    ctx = state.ctx
    out: list[tuple[float, PartialState]] = []
    unvisited = state.unvisited()
    routes_after_open = ctx.m - state.closed_count - 1
    r_ret = ctx.m - state.closed_count
    clist = ctx.cost_rows

    if unvisited:
        minima, s2 = _head_minima(ctx, unvisited)
        min_of = dict(zip(unvisited, minima))
        legs = sorted(clist[j][0] for j in unvisited)
        ret_full = sum(legs[:r_ret])
        ret_less = sum(legs[:r_ret - 1])
    else:
        min_of, s2, ret_full, ret_less = {}, 0.0, 0.0, 0.0

    if state.open_route:
        last = state.open_route[-1]
        row = clist[last]
        # Close the open route and return to the depot.
        remaining_routes = ctx.m - state.closed_count - 1
        closable = (remaining_routes == 0 if not unvisited
                    else 1 <= remaining_routes <= len(unvisited))
        spare = remaining_routes * ctx.capacity
        if closable and state.unvisited_demand <= spare + COST_EPS:
            child = PartialState(
                ctx=ctx, closed=state.closed + (state.open_route,),
                open_route=(), visited_mask=state.visited_mask,
                cost=state.cost + row[0],
                open_load=0.0, last_first=state.last_first,
                unvisited_demand=state.unvisited_demand)
            out.append((child.cost + s2 + ret_less, child))
        # Extend to an unvisited asset.
        if len(unvisited) - 1 >= routes_after_open:
            spare = (ctx.capacity - state.open_load) + routes_after_open * ctx.capacity
            for j in unvisited:
                qj = ctx.demand_list[j]
                if state.open_load + qj > ctx.capacity + COST_EPS:
                    continue
                if state.unvisited_demand > spare + COST_EPS:
                    continue
                child = PartialState(
                    ctx=ctx, closed=state.closed,
                    open_route=state.open_route + (j,),
                    visited_mask=state.visited_mask | (1 << j),
                    cost=state.cost + row[j],
                    open_load=state.open_load + qj,
                    last_first=state.last_first,
                    unvisited_demand=state.unvisited_demand - qj)
                out.append((child.cost + s2 - min_of[j] + ret_full, child))
    elif state.closed_count < ctx.m:
        # Open the next route; first stops increase across routes.
        if len(unvisited) - 1 >= routes_after_open:
            row = clist[0]
            spare = ctx.capacity + routes_after_open * ctx.capacity
            for j in unvisited:
                if j <= state.last_first:
                    continue
                qj = ctx.demand_list[j]
                if qj > ctx.capacity + COST_EPS:
                    continue
                if state.unvisited_demand > spare + COST_EPS:
                    continue
                child = PartialState(
                    ctx=ctx, closed=state.closed, open_route=(j,),
                    visited_mask=state.visited_mask | (1 << j),
                    cost=state.cost + row[j],
                    open_load=qj, last_first=j,
                    unvisited_demand=state.unvisited_demand - qj)
                out.append((child.cost + s2 - min_of[j] + ret_full, child))
    return out


def _canonical_solution(instance: Instance, costs: CostMatrix,
                        routes: list[tuple[int, ...]], method: str) -> Solution:
    ordered = sorted(routes)
    built = tuple(make_route(instance, costs, i, stops)
                  for i, stops in enumerate(ordered))
    total = float(sum(r.duration for r in built))
    return Solution(routes=built, total_cost=total, method=method)


def _polish_routes(ctx: _Context, routes: list[list[int]]) -> list[list[int]]:
    """Deterministic relocate/swap/reversal descent on a starting solution.

    Only tightens the warm-start incumbent; optimality never depends on it.
    Routes are kept nonempty so the exactly-m structure survives.
    """
    c = ctx.cost_rows
    q = ctx.demand_list
    cap = ctx.capacity + COST_EPS

    def rcost(seq: list[int]) -> float:
        prev = 0
        total = 0.0
        for s in seq:
            total += c[prev][s]
            prev = s
        return total + c[prev][0]

    costs = [rcost(r) for r in routes]
    loads = [sum(q[s] for s in r) for r in routes]

    for _ in range(500):
        # best = (delta, tiebreak, i, new_route_i, k, new_route_k_or_None)
        best = None
        for i, src in enumerate(routes):
            # Segment reversal inside one route (costs are asymmetric, so
            # evaluate the rewritten route in full).
            for p in range(len(src)):
                for r in range(p + 1, len(src)):
                    cand = src[:p] + src[p:r + 1][::-1] + src[r + 1:]
                    delta = rcost(cand) - costs[i]
                    move = (delta, (0, i, p, r))
                    if delta < -1e-9 and (best is None or move < best[:2]):
                        best = (*move, i, cand, None, None)
            # Relocate one stop to any position in any route.
            for p, stop in enumerate(src):
                if len(src) == 1:
                    continue  # never empty a route
                removed = src[:p] + src[p + 1:]
                for k, dst in enumerate(routes):
                    if k != i and loads[k] + q[stop] > cap:
                        continue
                    base = removed if k == i else dst
                    for pos in range(len(base) + 1):
                        if k == i and pos == p:
                            continue
                        cand = base[:pos] + [stop] + base[pos:]
                        if k == i:
                            delta = rcost(cand) - costs[i]
                        else:
                            delta = (rcost(removed) + rcost(cand)
                                     - costs[i] - costs[k])
                        move = (delta, (1, i, p, k, pos))
                        if delta < -1e-9 and (best is None or move < best[:2]):
                            if k == i:
                                best = (*move, i, cand, None, None)
                            else:
                                best = (*move, i, removed, k, cand)
            # Swap two stops across routes.
            for k in range(i + 1, len(routes)):
                dst = routes[k]
                for p, a in enumerate(src):
                    for r, b in enumerate(dst):
                        if (loads[i] - q[a] + q[b] > cap
                                or loads[k] - q[b] + q[a] > cap):
                            continue
                        cand_i = src[:p] + [b] + src[p + 1:]
                        cand_k = dst[:r] + [a] + dst[r + 1:]
                        delta = (rcost(cand_i) + rcost(cand_k)
                                 - costs[i] - costs[k])
                        move = (delta, (2, i, p, k, r))
                        if delta < -1e-9 and (best is None or move < best[:2]):
                            best = (*move, i, cand_i, k, cand_k)
        if best is None:
            break
        _, _, i, cand_i, k, cand_k = best
        routes[i] = cand_i
        costs[i] = rcost(cand_i)
        loads[i] = sum(q[s] for s in cand_i)
        if k is not None:
            routes[k] = cand_k
            costs[k] = rcost(cand_k)
            loads[k] = sum(q[s] for s in cand_k)
    return routes


class _Dominance:
    """Drop states provably no better than an already seen sibling.

    Two states at the same (visited set, position, closed count) compare by
    accumulated cost, open load and first-stop watermark; a state beaten on
    all three cannot lead to a better completion.
    """

    def __init__(self):
        self.seen: dict[tuple, list[tuple[float, float, int]]] = {}

    def admit(self, state: PartialState) -> bool:
        last = state.open_route[-1] if state.open_route else 0
        key = (state.visited_mask, last, state.closed_count)
        entry = (state.cost, state.open_load, state.last_first)
        bucket = self.seen.get(key)
        if bucket is None:
            self.seen[key] = [entry]
            return True
        for cost, load, first in bucket:
            if (cost <= entry[0] + _TIE_EPS and load <= entry[1] + COST_EPS
                    and first <= entry[2]):
                return False
        bucket[:] = [e for e in bucket
                     if not (entry[0] <= e[0] + _TIE_EPS
                             and entry[1] <= e[1] + COST_EPS
                             and entry[2] <= e[2])]
        bucket.append(entry)
        return True


def solve_exact(instance: Instance, config: SolveConfig | None = None) -> SolveResult:
    """Globally optimal solution of the routing model, or the best incumbent
    when the time or node budget runs out.

    Instances whose demands cannot fit the fleet report INFEASIBLE; other
    invariant breaches and m > n are usage errors and raise.
    """
    if config is None:
        config = SolveConfig()
    t_start = time.perf_counter()

    violations = validate_instance(instance)
    capacity_bad = [v for v in violations
                    if v.kind is ViolationKind.CAPACITY_EXCEEDED]
    structural = [v for v in violations
                  if v.kind not in (ViolationKind.CAPACITY_EXCEEDED,
                                    ViolationKind.ENDURANCE_EXCEEDED_WARNING)]
    if structural:
        raise ValueError("instance fails validation: "
                         + "; ".join(v.detail for v in structural))
    if instance.num_drones > instance.n:
        raise ValueError(f"m={instance.num_drones} > n={instance.n}: the model "
                         "requires every drone to fly a nonempty route")
    if capacity_bad:
        return SolveResult(status=SolveStatus.INFEASIBLE, incumbent=None,
                           lower_bound=math.inf, nodes_explored=0,
                           wall_time=time.perf_counter() - t_start)

    costs = build_cost_matrix(instance)
    program = build_cvrp_model(instance, costs)

    def check_incumbent(sol: Solution) -> None:
        bad = verify_assignment(program, encode_solution(instance, sol, program))
        if bad:
            raise AssertionError(f"incumbent fails the integer program: {bad[0]}")

    root = root_state(instance, costs)
    incumbent: Solution | None = None
    inc_cost = math.inf
    if config.warm_start:
        from .gnn import solve_gnn
        try:
            warm = solve_gnn(instance)
        except Exception:
            warm = None
        if warm is not None:
            polished = _polish_routes(root.ctx,
                                      [list(r.stops) for r in warm.routes])
            incumbent = _canonical_solution(
                instance, costs, [tuple(r) for r in polished], "exact")
            inc_cost = incumbent.total_cost
            check_incumbent(incumbent)

    counter = 0
    best_first = config.branching == "best_first"
    # Heap entries: (bound, tight?, depth, counter, state). Cheap bounds are
    # tightened lazily with the assignment relaxation on first pop.
    frontier: list = [(_cheap_bound(root), False, 0, counter, root)]
    dominance = _Dominance()
    dominance.admit(root)
    nodes = 0
    status: SolveStatus | None = None
    frontier_lb = math.inf  # bound of the frontier when pruning stops the run

    def threshold() -> float:
        if not math.isfinite(inc_cost):
            return math.inf
        return inc_cost - max(config.gap_tolerance * inc_cost, _TIE_EPS)

    while frontier:
        if time.perf_counter() - t_start > config.time_limit:
            status = SolveStatus.FEASIBLE_TIMEOUT
            break
        if config.node_limit is not None and nodes >= config.node_limit:
            status = SolveStatus.NODE_LIMIT
            break

        if best_first:
            bound, tight, depth, _, state = heapq.heappop(frontier)
        else:
            bound, tight, depth, _, state = frontier.pop()

        if bound >= threshold():
            if best_first:
                frontier_lb = bound
                frontier.clear()  # all remaining bounds are at least as large
                break
            continue
        if not tight:
            tb = lower_bound(state)
            if tb >= threshold():
                continue
            if best_first and frontier and tb > frontier[0][0] + _TIE_EPS:
                counter += 1
                heapq.heappush(frontier, (tb, True, depth, counter, state))
                continue
            bound = tb
        nodes += 1

        if state.is_terminal():
            if state.cost < inc_cost - _TIE_EPS:
                incumbent = _canonical_solution(instance, costs,
                                                list(state.closed), "exact")
                inc_cost = incumbent.total_cost
                check_incumbent(incumbent)
            continue

        scored = _expand(state)
        if not best_first:
            for b, ch in sorted(scored, key=lambda t: -t[0]):
                if b < threshold() and dominance.admit(ch):
                    counter += 1
                    frontier.append((b, False, depth + 1, counter, ch))
        else:
            for b, ch in scored:
                if b < threshold() and dominance.admit(ch):
                    counter += 1
                    heapq.heappush(frontier, (b, False, depth + 1, counter, ch))

    wall = time.perf_counter() - t_start
    open_bounds = [entry[0] for entry in frontier]
    if math.isfinite(frontier_lb):
        open_bounds.append(frontier_lb)
    if status is None:
        # Frontier exhausted: the incumbent, if any, is optimal.
        if incumbent is None:
            return SolveResult(status=SolveStatus.INFEASIBLE, incumbent=None,
                               lower_bound=math.inf, nodes_explored=nodes,
                               wall_time=wall)
        gap_lb = inc_cost if config.gap_tolerance == 0 else min(
            [inc_cost] + open_bounds)
        return SolveResult(status=SolveStatus.OPTIMAL, incumbent=incumbent,
                           lower_bound=gap_lb, nodes_explored=nodes,
                           wall_time=wall)

    lb = min([inc_cost] + open_bounds) if open_bounds else inc_cost
    return SolveResult(status=status, incumbent=incumbent, lower_bound=lb,
                       nodes_explored=nodes, wall_time=wall)
