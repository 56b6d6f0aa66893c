"""Domain types and shared evaluation logic for drone fleet routing.

Node 0 is always the depot; assets are numbered 1..n contiguously. All
quantities are SI: meters, seconds, liters. Every type here is immutable
after construction, so instances and matrices can be shared freely across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Absolute tolerance for cost and capacity comparisons throughout the package.
COST_EPS = 1e-9


class UnknownAssetError(KeyError):
    """Raised when a route references an asset id the instance does not have."""


class ViolationKind(Enum):
    UNVISITED_ASSET = "unvisited_asset"
    DUPLICATE_VISIT = "duplicate_visit"
    CAPACITY_EXCEEDED = "capacity_exceeded"
    WRONG_ROUTE_COUNT = "wrong_route_count"
    BAD_ARITHMETIC = "bad_arithmetic"
    ENDURANCE_EXCEEDED_WARNING = "endurance_exceeded_warning"


@dataclass(frozen=True)
class Violation:
    """One detected breach of an instance or solution invariant.

    Endurance warnings are advisory: they never make a solution infeasible.
    """

    kind: ViolationKind
    detail: str
    magnitude: float = 0.0


def is_feasible(violations: list[Violation]) -> bool:
    """True when the only violations present are endurance warnings."""
    return all(v.kind is ViolationKind.ENDURANCE_EXCEEDED_WARNING for v in violations)


@dataclass(frozen=True)
class AssetType:
    """A category of serviceable asset with a fixed demand and service time."""

    id: int
    name: str
    demand: float        # liters of disinfectant consumed per asset
    service_time: float  # seconds spent at the asset


@dataclass(frozen=True)
class Asset:
    id: int       # 1..n; 0 is reserved for the depot
    type_id: int
    x: float
    y: float


@dataclass(frozen=True)
class GeneratorInfo:
    """Provenance of a generated instance: PRNG identifier plus seed."""

    algorithm: str
    seed: int


@dataclass(frozen=True)
class Instance:
    """A complete routing problem: area, depot, typed assets, fleet parameters.

    ``endurance`` is advisory only; exceeding it is reported as a warning,
    never as infeasibility.
    """

    area_width: float
    area_height: float
    depot_x: float
    depot_y: float
    assets: tuple[Asset, ...]
    catalog: tuple[AssetType, ...]
    num_drones: int       # m
    capacity: float       # liters per drone
    speed: float          # meters per second
    endurance: float      # seconds of flight time, advisory
    generator: GeneratorInfo | None = None

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "catalog", tuple(self.catalog))

    @property
    def n(self) -> int:
        return len(self.assets)

    def asset(self, asset_id: int) -> Asset:
        for a in self.assets:
            if a.id == asset_id:
                return a
        raise UnknownAssetError(f"no asset with id {asset_id}")

    def asset_type(self, type_id: int) -> AssetType:
        for t in self.catalog:
            if t.id == type_id:
                return t
        raise KeyError(f"no asset type with id {type_id}")

    def demand_vector(self) -> np.ndarray:
        """Demand per node, indexed 0..n; the depot demands nothing."""
        q = np.zeros(self.n + 1)
        for a in self.assets:
            q[a.id] = self.asset_type(a.type_id).demand
        return q

    def service_vector(self) -> np.ndarray:
        """Service time per node, indexed 0..n; zero at the depot."""
        s = np.zeros(self.n + 1)
        for a in self.assets:
            s[a.id] = self.asset_type(a.type_id).service_time
        return s

    def total_demand(self) -> float:
        return float(self.demand_vector().sum())


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Pairwise travel and maintenance-cost matrices over depot plus assets.

    ``travel[i][j]`` is the flight time between nodes i and j (symmetric,
    zero diagonal). ``cost[i][j]`` adds the service time of the destination
    j, so it is asymmetric whenever service times differ.
    """

    size: int             # n + 1 nodes including the depot
    travel: np.ndarray
    cost: np.ndarray


@dataclass(frozen=True)
class Route:
    """One drone's tour: depot -> stops -> depot."""

    drone_id: int
    stops: tuple[int, ...]
    load: float        # liters, sum of stop demands
    duration: float    # seconds, arc costs including the return leg

    def __post_init__(self):
        object.__setattr__(self, "stops", tuple(self.stops))


@dataclass(frozen=True)
class Solution:
    """A full assignment of assets to drone routes."""

    routes: tuple[Route, ...]
    total_cost: float
    method: str  # one of: exact, gnn, brute, external

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))


def build_cost_matrix(instance: Instance) -> CostMatrix:
    """Travel times and per-arc maintenance costs for all node pairs.

    Travel is Euclidean distance divided by drone speed; cost adds the
    destination's service time (zero for the depot).
    """
    if instance.speed <= 0:
        raise ValueError(f"drone speed must be positive, got {instance.speed}")
    n = instance.n
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    xs[0], ys[0] = instance.depot_x, instance.depot_y
    for a in instance.assets:
        xs[a.id], ys[a.id] = a.x, a.y
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    travel = np.hypot(dx, dy) / instance.speed
    np.fill_diagonal(travel, 0.0)
    cost = travel + instance.service_vector()[None, :]
    travel.setflags(write=False)
    cost.setflags(write=False)
    return CostMatrix(size=n + 1, travel=travel, cost=cost)


def make_route(instance: Instance, costs: CostMatrix, drone_id: int,
               stops: tuple[int, ...]) -> Route:
    """Build a Route with its load and duration computed from the matrices."""
    stops = tuple(stops)
    q = instance.demand_vector()
    load = float(sum(q[s] for s in stops))
    duration = route_duration(costs, stops)
    return Route(drone_id=drone_id, stops=stops, load=load, duration=duration)


def route_duration(costs: CostMatrix, stops: tuple[int, ...]) -> float:
    """Sum of arc costs depot -> stops -> depot; empty routes cost nothing."""
    if not stops:
        return 0.0
    c = costs.cost
    total = c[0, stops[0]]
    for a, b in zip(stops, stops[1:]):
        total += c[a, b]
    total += c[stops[-1], 0]
    return float(total)


def validate_instance(instance: Instance) -> list[Violation]:
    """Check the instance against its invariants; an empty list means valid.

    Structural and parameter defects are reported with the closest matching
    violation kind and an explanatory detail string.
    """
    v: list[Violation] = []
    if instance.speed <= 0:
        v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                           f"drone speed must be positive, got {instance.speed}",
                           instance.speed))
    if instance.capacity <= 0:
        v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                           f"drone capacity must be positive, got {instance.capacity}",
                           instance.capacity))
    if instance.endurance <= 0:
        v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                           f"endurance must be positive, got {instance.endurance}",
                           instance.endurance))
    if instance.num_drones < 1:
        v.append(Violation(ViolationKind.WRONG_ROUTE_COUNT,
                           f"fleet must have at least one drone, got {instance.num_drones}",
                           instance.num_drones))
    if instance.area_width <= 0 or instance.area_height <= 0:
        v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                           "area dimensions must be positive", 0.0))

    type_ids = [t.id for t in instance.catalog]
    if len(set(type_ids)) != len(type_ids):
        v.append(Violation(ViolationKind.DUPLICATE_VISIT,
                           "duplicate asset type ids in catalog", 0.0))
    names = [t.name for t in instance.catalog]
    if len(set(names)) != len(names):
        v.append(Violation(ViolationKind.DUPLICATE_VISIT,
                           "duplicate asset type names in catalog", 0.0))
    for t in instance.catalog:
        if t.demand <= 0:
            v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                               f"type {t.name!r} must have positive demand", t.demand))
        if t.service_time < 0:
            v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                               f"type {t.name!r} has negative service time",
                               t.service_time))

    ids = [a.id for a in instance.assets]
    if len(set(ids)) != len(ids):
        v.append(Violation(ViolationKind.DUPLICATE_VISIT,
                           "duplicate asset ids", 0.0))
    elif sorted(ids) != list(range(1, instance.n + 1)):
        v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                           "asset ids must be contiguous 1..n (0 is the depot)", 0.0))

    known_types = set(type_ids)
    total_demand = 0.0
    for a in instance.assets:
        if a.type_id not in known_types:
            v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                               f"asset {a.id} references unknown type {a.type_id}",
                               a.type_id))
            continue
        if not (0 <= a.x <= instance.area_width) or not (0 <= a.y <= instance.area_height):
            v.append(Violation(ViolationKind.BAD_ARITHMETIC,
                               f"asset {a.id} lies outside the service area",
                               0.0))
        q = instance.asset_type(a.type_id).demand
        total_demand += q
        if q > instance.capacity + COST_EPS:
            v.append(Violation(ViolationKind.CAPACITY_EXCEEDED,
                               f"asset {a.id} demand {q} exceeds drone capacity "
                               f"{instance.capacity}", q - instance.capacity))

    fleet_capacity = instance.num_drones * instance.capacity
    if total_demand > fleet_capacity + COST_EPS:
        v.append(Violation(ViolationKind.CAPACITY_EXCEEDED,
                           f"total demand {total_demand:.6g} exceeds fleet capacity "
                           f"{fleet_capacity:.6g} (demands are unsplittable and each "
                           "drone flies a single trip)",
                           total_demand - fleet_capacity))
    return v


def evaluate_solution(instance: Instance,
                      solution: Solution) -> tuple[float, list[Violation]]:
    """Recompute a solution's cost from scratch and list every invariant breach.

    The returned total is always the recomputed one. Unresolvable asset ids
    raise UnknownAssetError; everything else is reported as a Violation.
    Endurance breaches are warnings only.
    """
    costs = build_cost_matrix(instance)
    q = instance.demand_vector()

    for route in solution.routes:
        for sid in route.stops:
            if not (1 <= sid <= instance.n):
                raise UnknownAssetError(
                    f"route {route.drone_id} visits unknown asset {sid}")

    violations: list[Violation] = []
    if len(solution.routes) != instance.num_drones:
        violations.append(Violation(
            ViolationKind.WRONG_ROUTE_COUNT,
            f"solution has {len(solution.routes)} routes, fleet has "
            f"{instance.num_drones} drones",
            len(solution.routes) - instance.num_drones))
    if instance.n >= instance.num_drones:
        for route in solution.routes:
            if not route.stops:
                violations.append(Violation(
                    ViolationKind.WRONG_ROUTE_COUNT,
                    f"route {route.drone_id} is empty but there are enough "
                    "assets for every drone", 0.0))

    visits: dict[int, int] = {a.id: 0 for a in instance.assets}
    for route in solution.routes:
        for sid in route.stops:
            visits[sid] += 1
    for aid, count in sorted(visits.items()):
        if count == 0:
            violations.append(Violation(ViolationKind.UNVISITED_ASSET,
                                        f"asset {aid} is never visited", aid))
        elif count > 1:
            violations.append(Violation(ViolationKind.DUPLICATE_VISIT,
                                        f"asset {aid} is visited {count} times",
                                        count))

    total = 0.0
    for route in solution.routes:
        load = float(sum(q[s] for s in route.stops))
        duration = route_duration(costs, route.stops)
        total += duration
        if load > instance.capacity + COST_EPS:
            violations.append(Violation(
                ViolationKind.CAPACITY_EXCEEDED,
                f"route {route.drone_id} load {load:.6g} exceeds capacity "
                f"{instance.capacity:.6g}", load - instance.capacity))
        if abs(load - route.load) > COST_EPS:
            violations.append(Violation(
                ViolationKind.BAD_ARITHMETIC,
                f"route {route.drone_id} reports load {route.load:.6g}, "
                f"recomputed {load:.6g}", abs(load - route.load)))
        if abs(duration - route.duration) > COST_EPS:
            violations.append(Violation(
                ViolationKind.BAD_ARITHMETIC,
                f"route {route.drone_id} reports duration {route.duration:.6g}, "
                f"recomputed {duration:.6g}", abs(duration - route.duration)))
        if duration > instance.endurance + COST_EPS:
            violations.append(Violation(
                ViolationKind.ENDURANCE_EXCEEDED_WARNING,
                f"route {route.drone_id} duration {duration:.6g} s exceeds the "
                f"advisory endurance {instance.endurance:.6g} s",
                duration - instance.endurance))

    if abs(total - solution.total_cost) > COST_EPS:
        violations.append(Violation(
            ViolationKind.BAD_ARITHMETIC,
            f"solution reports total cost {solution.total_cost:.6g}, "
            f"recomputed {total:.6g}", abs(total - solution.total_cost)))
    return total, violations
