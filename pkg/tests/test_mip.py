import math
from itertools import permutations, product

import pytest

from droneroute.bruteforce import solve_bruteforce
from droneroute.mip import (Assignment, Relation, build_cvrp_model,
                            decode_assignment, encode_solution, export_lp,
                            objective_value, verify_assignment)
from droneroute.model import (Solution, build_cost_matrix, evaluate_solution,
                              make_route)
from helpers import build_instance, parse_lp, random_instance, var_name


def test_model_dimensions_n3_m1():
    inst = random_instance(seed=1, n=3, m=1)
    program = build_cvrp_model(inst)
    assert len(program.arc_vars) == 12
    assert len(program.load_vars) == 3
    tags = [c.tag for c in program.constraints]
    assert sum(t.startswith("visit_in") for t in tags) == 3
    assert sum(t.startswith("visit_out") for t in tags) == 3
    assert tags.count("depot_in") == 1
    assert tags.count("depot_out") == 1
    assert sum(t.startswith("mtz") for t in tags) == 6
    assert len(tags) == 3 + 3 + 1 + 1 + 6


def test_objective_coefficients_match_cost_matrix():
    inst = random_instance(seed=2, n=4, m=2)
    costs = build_cost_matrix(inst)
    program = build_cvrp_model(inst, costs)
    for (kind, i, j), coef in program.objective.items():
        assert coef == costs.cost[i, j]


def test_load_bounds_are_demand_to_capacity():
    inst = random_instance(seed=2, n=4, m=2)
    program = build_cvrp_model(inst)
    q = inst.demand_vector()
    for i in range(1, 5):
        lo, hi = program.load_bounds[("u", i)]
        assert lo == q[i]
        assert hi == inst.capacity


def test_build_rejects_empty_and_overstaffed():
    inst = random_instance(seed=3, n=2, m=1)
    empty = type(inst)(area_width=10, area_height=10, depot_x=0, depot_y=0,
                       assets=(), catalog=inst.catalog, num_drones=1,
                       capacity=5.5, speed=20.0, endurance=780.0)
    with pytest.raises(ValueError):
        build_cvrp_model(empty)
    over = type(inst)(area_width=inst.area_width, area_height=inst.area_height,
                      depot_x=0, depot_y=0, assets=inst.assets,
                      catalog=inst.catalog, num_drones=5, capacity=5.5,
                      speed=20.0, endurance=780.0)
    with pytest.raises(ValueError, match="m <= n"):
        build_cvrp_model(over)
    relaxed = build_cvrp_model(over, relax_route_count=True)
    depot_rows = [c for c in relaxed.constraints if c.tag.startswith("depot")]
    assert all(c.relation is Relation.LE for c in depot_rows)


def _zero_assignment(program):
    return Assignment(arc_values={v: 0 for v in program.arc_vars},
                      load_values={("u", i): lo for (_, i), (lo, _)
                                   in program.load_bounds.items()})


def test_all_zero_assignment_violates_every_degree_row():
    inst = random_instance(seed=4, n=3, m=1)
    program = build_cvrp_model(inst)
    violated = dict(verify_assignment(program, _zero_assignment(program)))
    for j in range(1, 4):
        assert violated[f"visit_in[{j}]"] == pytest.approx(-1.0)
        assert violated[f"visit_out[{j}]"] == pytest.approx(-1.0)
    assert violated["depot_in"] == pytest.approx(-1.0)
    assert violated["depot_out"] == pytest.approx(-1.0)


def test_two_cycle_violates_mtz_for_any_loads():
    inst = random_instance(seed=4, n=2, m=1)
    program = build_cvrp_model(inst)
    q = inst.demand_vector()
    for u1 in (q[1], inst.capacity / 2, inst.capacity):
        for u2 in (q[2], inst.capacity / 2, inst.capacity):
            assignment = _zero_assignment(program)
            assignment.arc_values[("x", 1, 2)] = 1
            assignment.arc_values[("x", 2, 1)] = 1
            assignment.load_values[("u", 1)] = u1
            assignment.load_values[("u", 2)] = u2
            tags = [t for t, _ in verify_assignment(program, assignment)]
            assert any(t.startswith("mtz") for t in tags)


def test_verify_domain_mismatch_is_hard_error():
    inst = random_instance(seed=4, n=3, m=1)
    program = build_cvrp_model(inst)
    assignment = _zero_assignment(program)
    del assignment.arc_values[("x", 0, 1)]
    with pytest.raises(ValueError):
        verify_assignment(program, assignment)
    fractional = _zero_assignment(program)
    fractional.arc_values[("x", 0, 1)] = 0.5
    with pytest.raises(ValueError):
        verify_assignment(program, fractional)


def test_bounds_breach_reported_with_tag():
    inst = random_instance(seed=5, n=3, m=1)
    program = build_cvrp_model(inst)
    solution = solve_bruteforce(inst).incumbent
    assignment = encode_solution(inst, solution, program)
    assignment.load_values[("u", 2)] = -1.0
    tags = [t for t, _ in verify_assignment(program, assignment)]
    assert "bounds[2]" in tags


def test_encoded_oracle_solutions_verify_clean():
    for seed in range(5):
        inst = random_instance(seed=seed, n=5, m=2)
        program = build_cvrp_model(inst)
        solution = solve_bruteforce(inst).incumbent
        assignment = encode_solution(inst, solution, program)
        assert verify_assignment(program, assignment) == []
        assert objective_value(program, assignment) == pytest.approx(
            solution.total_cost, abs=1e-9)


def test_objective_equals_evaluator_on_decoded_solution():
    inst = random_instance(seed=6, n=5, m=2)
    program = build_cvrp_model(inst)
    solution = solve_bruteforce(inst).incumbent
    assignment = encode_solution(inst, solution, program)
    decoded = decode_assignment(inst, assignment)
    total, violations = evaluate_solution(inst, decoded)
    assert violations == []
    assert objective_value(program, assignment) == pytest.approx(total, abs=1e-9)


def test_decode_two_singletons_and_chain():
    inst = random_instance(seed=7, n=2, m=2)
    program = build_cvrp_model(inst)
    assignment = _zero_assignment(program)
    q = inst.demand_vector()
    for j in (1, 2):
        assignment.arc_values[("x", 0, j)] = 1
        assignment.arc_values[("x", j, 0)] = 1
        assignment.load_values[("u", j)] = q[j]
    decoded = decode_assignment(inst, assignment)
    assert [r.stops for r in decoded.routes] == [(1,), (2,)]

    chain = random_instance(seed=7, n=3, m=1)
    program = build_cvrp_model(chain)
    assignment = _zero_assignment(program)
    q = chain.demand_vector()
    running = 0.0
    prev = 0
    for j in (1, 2, 3):
        assignment.arc_values[("x", prev, j)] = 1
        running += q[j]
        assignment.load_values[("u", j)] = running
        prev = j
    assignment.arc_values[("x", 3, 0)] = 1
    decoded = decode_assignment(chain, assignment)
    assert [r.stops for r in decoded.routes] == [(1, 2, 3)]


def test_decode_encode_round_trip_on_oracle_outputs():
    for seed in range(4):
        inst = random_instance(seed=seed + 20, n=6, m=2)
        solution = solve_bruteforce(inst).incumbent
        decoded = decode_assignment(inst, encode_solution(inst, solution))
        assert [r.stops for r in decoded.routes] == [r.stops for r in solution.routes]
        assert decoded.total_cost == pytest.approx(solution.total_cost, abs=1e-9)


def test_decode_rejects_infeasible_and_names_tag():
    inst = random_instance(seed=8, n=3, m=1)
    program = build_cvrp_model(inst)
    with pytest.raises(ValueError, match=r"visit_in"):
        decode_assignment(inst, _zero_assignment(program))


def _enumerate_route_sets(ids, m):
    """Every unordered set of m nonempty sequences covering ids."""
    def partitions(items, blocks):
        if not items:
            if len(blocks) == blocks_target:
                yield [tuple(b) for b in blocks]
            return
        head, rest = items[0], items[1:]
        for b in blocks:
            b.append(head)
            yield from partitions(rest, blocks)
            b.pop()
        if len(blocks) < blocks_target:
            blocks.append([head])
            yield from partitions(rest, blocks)
            blocks.pop()

    blocks_target = m
    for part in partitions(list(ids), []):
        for ordering in product(*(permutations(b) for b in part)):
            yield ordering


def test_minimum_over_feasible_assignments_is_the_oracle_optimum():
    inst = random_instance(seed=9, n=6, m=2)
    program = build_cvrp_model(inst)
    costs = build_cost_matrix(inst)
    q = inst.demand_vector()
    best = math.inf
    for route_set in _enumerate_route_sets(range(1, 7), 2):
        if any(sum(q[s] for s in seq) > inst.capacity + 1e-9 for seq in route_set):
            continue
        built = tuple(make_route(inst, costs, k, seq)
                      for k, seq in enumerate(route_set))
        solution = Solution(routes=built,
                            total_cost=float(sum(r.duration for r in built)),
                            method="external")
        assignment = encode_solution(inst, solution, program)
        assert verify_assignment(program, assignment) == []
        best = min(best, objective_value(program, assignment))
    oracle = solve_bruteforce(inst)
    assert best == pytest.approx(oracle.incumbent.total_cost, abs=1e-9)


def test_relaxed_model_decodes_with_empty_route_padding():
    inst = random_instance(seed=11, n=1, m=1)
    over = type(inst)(area_width=inst.area_width, area_height=inst.area_height,
                      depot_x=inst.depot_x, depot_y=inst.depot_y,
                      assets=inst.assets, catalog=inst.catalog,
                      num_drones=2, capacity=inst.capacity, speed=inst.speed,
                      endurance=inst.endurance)
    program = build_cvrp_model(over, relax_route_count=True)
    assignment = _zero_assignment(program)
    assignment.arc_values[("x", 0, 1)] = 1
    assignment.arc_values[("x", 1, 0)] = 1
    assignment.load_values[("u", 1)] = over.demand_vector()[1]
    assert verify_assignment(program, assignment) == []
    decoded = decode_assignment(over, assignment, relax_route_count=True)
    assert [r.stops for r in decoded.routes] == [(1,), ()]


def test_export_lp_tiny_model_and_round_trip():
    inst = build_instance([(100.0, 0.0, 1.0, 30.0)], speed=20.0)
    program = build_cvrp_model(inst)
    text = export_lp(program)
    objective, constraints, bounds, binaries = parse_lp(text)
    assert binaries == {"x_0_1", "x_1_0"}
    assert set(bounds) == {"u_1"}

    for var, coef in program.objective.items():
        assert objective[var_name(var)] == coef
    assert len(objective) == len(program.objective)


def test_export_lp_round_trips_every_coefficient():
    inst = random_instance(seed=10, n=4, m=2)
    program = build_cvrp_model(inst)
    objective, constraints, bounds, binaries = parse_lp(export_lp(program))

    assert objective == {var_name(v): c for v, c in program.objective.items()}
    assert binaries == {var_name(v) for v in program.arc_vars}
    for var in program.load_vars:
        assert bounds[var_name(var)] == program.load_bounds[var]
    assert len(constraints) == len(program.constraints)
    for row in program.constraints:
        name = row.tag.replace("][", "_").replace("[", "_").replace("]", "")
        coeffs, op, rhs = constraints[name]
        assert op == ("=" if row.relation is Relation.EQ else "<=")
        assert rhs == row.rhs
        assert coeffs == {var_name(v): c for v, c in row.coeffs.items()}
