"""The integer program behind the exact solver: arc variables, load variables,
degree constraints and the subtour-eliminating load-propagation rows.

Variables are keyed by tuples: ("x", i, j) for the binary arc i -> j and
("u", i) for the continuous load carried after serving asset i. Constraint
tags are stable strings (visit_in[j], visit_out[i], depot_out, depot_in,
mtz[i][j], bounds[i]) usable by downstream tooling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (COST_EPS, CostMatrix, Instance, Solution, Route,
                    build_cost_matrix, make_route)

Var = tuple  # ("x", i, j) or ("u", i)


class Relation(Enum):
    EQ = "eq"
    LE = "le"


@dataclass(frozen=True)
class LinearConstraint:
    """coeffs . vars  (=|<=)  rhs"""

    coeffs: dict[Var, float]
    relation: Relation
    rhs: float
    tag: str

    def __post_init__(self):
        if not any(c != 0.0 for c in self.coeffs.values()):
            raise ValueError(f"constraint {self.tag} has no nonzero coefficient")


@dataclass(frozen=True)
class IntegerProgram:
    """Eq-style CVRP formulation over one instance: minimize total arc cost
    subject to degree, route-count and load-propagation constraints."""

    n: int
    num_routes: int
    arc_vars: tuple[Var, ...]
    load_vars: tuple[Var, ...]
    objective: dict[Var, float]
    constraints: tuple[LinearConstraint, ...]
    load_bounds: dict[Var, tuple[float, float]]  # u_i -> (demand_i, capacity)


@dataclass(frozen=True)
class Assignment:
    """Concrete values for every variable of an IntegerProgram."""

    arc_values: dict[Var, int]
    load_values: dict[Var, float]


def build_cvrp_model(instance: Instance, costs: CostMatrix | None = None,
                     relax_route_count: bool = False) -> IntegerProgram:
    """Construct the routing program for an instance.

    With ``relax_route_count`` the two depot-degree rows become <= (at most
    m departures/returns) instead of the printed exactly-m form; that is an
    extension, off by default, which makes m > n instances representable.
    """
    n = instance.n
    m = instance.num_drones
    if n == 0:
        raise ValueError("cannot build a routing model with zero assets")
    if m > n and not relax_route_count:
        raise ValueError(
            f"m={m} drones but only n={n} assets: the model forces m nonempty "
            "routes, so it needs m <= n (pass relax_route_count=True to allow "
            "at-most-m routes instead)")
    if costs is None:
        costs = build_cost_matrix(instance)

    nodes = range(n + 1)
    q = instance.demand_vector()
    Q = instance.capacity

    arc_vars = tuple(("x", i, j) for i in nodes for j in nodes if i != j)
    load_vars = tuple(("u", i) for i in range(1, n + 1))
    objective = {("x", i, j): float(costs.cost[i, j])
                 for i in nodes for j in nodes if i != j}

    rows: list[LinearConstraint] = []
    for j in range(1, n + 1):
        rows.append(LinearConstraint(
            coeffs={("x", i, j): 1.0 for i in nodes if i != j},
            relation=Relation.EQ, rhs=1.0, tag=f"visit_in[{j}]"))
    for i in range(1, n + 1):
        rows.append(LinearConstraint(
            coeffs={("x", i, j): 1.0 for j in nodes if j != i},
            relation=Relation.EQ, rhs=1.0, tag=f"visit_out[{i}]"))
    depot_relation = Relation.LE if relax_route_count else Relation.EQ
    rows.append(LinearConstraint(
        coeffs={("x", i, 0): 1.0 for i in range(1, n + 1)},
        relation=depot_relation, rhs=float(m), tag="depot_in"))
    rows.append(LinearConstraint(
        coeffs={("x", 0, j): 1.0 for j in range(1, n + 1)},
        relation=depot_relation, rhs=float(m), tag="depot_out"))

    # Load propagation: taking arc i -> j forces u_j >= u_i + q_j, which
    # rules out any cycle that avoids the depot and caps loads at capacity.
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            rows.append(LinearConstraint(
                coeffs={("u", i): 1.0, ("u", j): -1.0, ("x", i, j): Q},
                relation=Relation.LE, rhs=Q - float(q[j]), tag=f"mtz[{i}][{j}]"))

    load_bounds = {("u", i): (float(q[i]), Q) for i in range(1, n + 1)}
    return IntegerProgram(n=n, num_routes=m, arc_vars=arc_vars,
                          load_vars=load_vars, objective=objective,
                          constraints=tuple(rows), load_bounds=load_bounds)


def objective_value(program: IntegerProgram, assignment: Assignment) -> float:
    return float(sum(coef * assignment.arc_values[var]
                     for var, coef in program.objective.items()))


def verify_assignment(program: IntegerProgram,
                      assignment: Assignment) -> list[tuple[str, float]]:
    """Every violated constraint with its signed residual; empty = feasible.

    Residuals are lhs - rhs. Variable-bound breaches on the load variables
    are reported under bounds[i]. A mismatched variable domain is a hard
    error, not a violation.
    """
    if set(assignment.arc_values) != set(program.arc_vars):
        raise ValueError("assignment arc variables do not match the program")
    if set(assignment.load_values) != set(program.load_vars):
        raise ValueError("assignment load variables do not match the program")
    for var, val in assignment.arc_values.items():
        if val not in (0, 1):
            raise ValueError(f"arc variable {var} must be binary, got {val}")

    values: dict[Var, float] = {}
    values.update(assignment.arc_values)
    values.update(assignment.load_values)

    violated: list[tuple[str, float]] = []
    for row in program.constraints:
        residual = sum(coef * values[var] for var, coef in row.coeffs.items()) - row.rhs
        if row.relation is Relation.EQ:
            if abs(residual) > COST_EPS:
                violated.append((row.tag, residual))
        elif residual > COST_EPS:
            violated.append((row.tag, residual))
    for (kind, i), (lo, hi) in sorted(program.load_bounds.items(),
                                      key=lambda kv: kv[0][1]):
        u = assignment.load_values[(kind, i)]
        if u < lo - COST_EPS:
            violated.append((f"bounds[{i}]", u - lo))
        elif u > hi + COST_EPS:
            violated.append((f"bounds[{i}]", u - hi))
    return violated


def decode_assignment(instance: Instance, assignment: Assignment,
                      relax_route_count: bool = False) -> Solution:
    """Turn a feasible assignment into routes by walking arcs out of the depot.

    Routes come out ordered by their first stop. Infeasible assignments are
    rejected with the first violated constraint tag. Pass the same
    ``relax_route_count`` the program was built with; under the relaxation,
    missing routes decode as empty ones.
    """
    costs = build_cost_matrix(instance)
    program = build_cvrp_model(instance, costs, relax_route_count)
    violated = verify_assignment(program, assignment)
    if violated:
        tag, residual = violated[0]
        raise ValueError(f"assignment is infeasible: {tag} violated "
                         f"(residual {residual:+.6g})")

    successor: dict[int, int] = {}
    depot_starts: list[int] = []
    for (kind, i, j), val in assignment.arc_values.items():
        if val != 1:
            continue
        if i == 0:
            depot_starts.append(j)
        else:
            successor[i] = j

    routes: list[Route] = []
    for drone_id, start in enumerate(sorted(depot_starts)):
        stops = [start]
        while True:
            nxt = successor[stops[-1]]
            if nxt == 0:
                break
            stops.append(nxt)
        routes.append(make_route(instance, costs, drone_id, tuple(stops)))
    while len(routes) < instance.num_drones:  # only reachable when relaxed
        routes.append(Route(drone_id=len(routes), stops=(), load=0.0, duration=0.0))

    total = float(sum(r.duration for r in routes))
    return Solution(routes=tuple(routes), total_cost=total, method="external")


def encode_solution(instance: Instance, solution: Solution,
                    program: IntegerProgram | None = None) -> Assignment:
    """The inverse of decode: arcs from the routes, loads as running demand.

    Only defined for solutions whose m routes are all nonempty, i.e. the
    shapes the exactly-m model admits.
    """
    if program is None:
        program = build_cvrp_model(instance)
    q = instance.demand_vector()

    arc_values = {var: 0 for var in program.arc_vars}
    load_values: dict[Var, float] = {}
    for route in solution.routes:
        if not route.stops:
            raise ValueError("cannot encode a solution with empty routes")
        prev = 0
        running = 0.0
        for sid in route.stops:
            arc_values[("x", prev, sid)] = 1
            running += float(q[sid])
            load_values[("u", sid)] = running
            prev = sid
        arc_values[("x", prev, 0)] = 1
    return Assignment(arc_values=arc_values, load_values=load_values)


def _lp_num(x: float) -> str:
    return format(float(x), ".17g")


def _lp_name(tag: str) -> str:
    return tag.replace("][", "_").replace("[", "_").replace("]", "")


def _lp_terms(coeffs: dict[Var, float]) -> list[str]:
    parts: list[str] = []
    for var, coef in coeffs.items():
        name = f"{var[0]}_{'_'.join(str(k) for k in var[1:])}"
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_lp_num(abs(coef))} {name}")
    if parts and parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    return parts


def _lp_row(prefix: str, terms: list[str], suffix: str = "",
            per_line: int = 6) -> list[str]:
    lines = []
    for k in range(0, len(terms), per_line):
        chunk = " ".join(terms[k:k + per_line])
        lines.append(f"{prefix}{chunk}" if k == 0 else f"      {chunk}")
    if suffix:
        lines[-1] += suffix
    return lines


def export_lp(program: IntegerProgram) -> str:
    """Serialize the program in LP file format for external solvers.

    Bracketed tags become underscore-separated row names so the file stays
    within the strict LP identifier character set.
    """
    lines = ["\\ capacitated drone-routing model", "Minimize"]
    lines.extend(_lp_row(" obj: ", _lp_terms(program.objective)))
    lines.append("Subject To")
    for row in program.constraints:
        op = "=" if row.relation is Relation.EQ else "<="
        lines.extend(_lp_row(f" {_lp_name(row.tag)}: ", _lp_terms(row.coeffs),
                             suffix=f" {op} {_lp_num(row.rhs)}"))
    lines.append("Bounds")
    for var in program.load_vars:
        lo, hi = program.load_bounds[var]
        lines.append(f" {_lp_num(lo)} <= u_{var[1]} <= {_lp_num(hi)}")
    lines.append("Binary")
    arc_names = [f"x_{i}_{j}" for (_, i, j) in program.arc_vars]
    for k in range(0, len(arc_names), 8):
        lines.append(" " + " ".join(arc_names[k:k + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"
