from itertools import combinations, product

import pytest

from droneroute.bruteforce import solve_bruteforce
from droneroute.exact import solve_exact
from droneroute.gnn import (ClusteringInfeasibleError, cluster_assets,
                            clustering_objective, route_cluster, solve_gnn)
from droneroute.model import (build_cost_matrix, evaluate_solution,
                              is_feasible, validate_instance)
from helpers import build_instance, random_instance, sub_instance


def exhaustive_clustering_cost(inst, costs, k):
    """Reference optimum by trying every median subset and every assignment."""
    n = inst.n
    q = inst.demand_vector()
    c = costs.cost
    best = None
    ids = list(range(1, n + 1))
    for medians in combinations(ids, k):
        points = [j for j in ids if j not in medians]
        for choice in product(medians, repeat=len(points)):
            loads = {i: q[i] for i in medians}
            ok = True
            for p, med in zip(points, choice):
                loads[med] += q[p]
                if loads[med] > inst.capacity + 1e-9:
                    ok = False
                    break
            if not ok:
                continue
            obj = sum(c[i, i] for i in medians)
            obj += sum(c[med, p] for p, med in zip(points, choice))
            if best is None or obj < best:
                best = obj
    return best


def test_well_separated_groups_become_the_clusters():
    cluster_a = [(10.0, 10.0, 0.3, 60.0), (14.0, 10.0, 0.3, 60.0),
                 (12.0, 13.0, 0.3, 60.0)]
    cluster_b = [(900.0, 900.0, 0.3, 60.0), (904.0, 900.0, 0.3, 60.0),
                 (902.0, 903.0, 0.3, 60.0)]
    inst = build_instance(cluster_a + cluster_b, num_drones=2,
                          area=(1000.0, 1000.0))
    clustering = cluster_assets(inst, build_cost_matrix(inst), 2)
    groups = {}
    for asset_id, median in clustering.assignment.items():
        groups.setdefault(median, set()).add(asset_id)
    assert sorted(map(frozenset, groups.values())) == sorted(
        [frozenset({1, 2, 3}), frozenset({4, 5, 6})])


def test_every_asset_its_own_median_when_k_equals_n():
    inst = random_instance(seed=90, n=6, m=2)
    costs = build_cost_matrix(inst)
    clustering = cluster_assets(inst, costs, 6)
    assert clustering.medians == tuple(range(1, 7))
    assert all(clustering.assignment[j] == j for j in range(1, 7))
    service_total = float(sum(inst.service_vector()[1:]))
    assert clustering_objective(costs, clustering) == pytest.approx(
        service_total, abs=1e-9)
    q = inst.demand_vector()
    for j in range(1, 7):
        assert clustering.per_cluster_demand[j] == pytest.approx(q[j])


@pytest.mark.parametrize("seed,n,k", [(0, 6, 2), (1, 7, 3), (2, 8, 3),
                                      (3, 8, 2), (4, 6, 3)])
def test_exact_clustering_matches_exhaustive_enumeration(seed, n, k):
    inst = random_instance(seed=seed + 400, n=n, m=k)
    costs = build_cost_matrix(inst)
    clustering = cluster_assets(inst, costs, k)
    expected = exhaustive_clustering_cost(inst, costs, k)
    assert clustering_objective(costs, clustering) == pytest.approx(
        expected, abs=1e-9)


def test_clustering_invariants_hold():
    inst = random_instance(seed=91, n=12, m=4)
    costs = build_cost_matrix(inst)
    clustering = cluster_assets(inst, costs, 4)
    assert len(clustering.medians) == 4
    assert set(clustering.assignment) == set(range(1, 13))
    q = inst.demand_vector()
    for median in clustering.medians:
        members = clustering.members(median)
        assert median in members
        load = sum(q[j] for j in members)
        assert load == pytest.approx(clustering.per_cluster_demand[median])
        assert load <= inst.capacity + 1e-9


def test_clustering_infeasible_raises_helpful_error():
    points = [(float(i), 0.0, 2.0, 0.0) for i in (1, 2, 3)]
    inst = build_instance(points, num_drones=2, capacity=2.0, speed=1.0)
    with pytest.raises(ClusteringInfeasibleError, match="capacity"):
        cluster_assets(inst, build_cost_matrix(inst), 2)


def test_route_singleton_cluster():
    inst = build_instance([(100.0, 0.0, 1.0, 30.0)], speed=20.0)
    costs = build_cost_matrix(inst)
    route = route_cluster(inst, costs, {1}, 1)
    assert route.stops == (1,)
    assert route.duration == pytest.approx(costs.cost[0, 1] + costs.travel[1, 0],
                                           abs=1e-12)


def test_route_collinear_cluster_walks_the_line():
    points = [(10.0, 0.0, 0.3, 60.0), (20.0, 0.0, 0.3, 60.0),
              (30.0, 0.0, 0.3, 60.0)]
    inst = build_instance(points, speed=1.0)
    costs = build_cost_matrix(inst)
    route = route_cluster(inst, costs, {1, 2, 3}, 1)
    assert route.stops == (1, 2, 3)


def test_route_starts_at_median_even_when_another_asset_is_nearer_depot():
    points = [(5.0, 0.0, 0.3, 60.0), (50.0, 0.0, 0.3, 60.0)]
    inst = build_instance(points, speed=1.0)
    costs = build_cost_matrix(inst)
    route = route_cluster(inst, costs, {1, 2}, 2)
    assert route.stops[0] == 2


def test_route_cluster_rejects_bad_inputs():
    inst = random_instance(seed=92, n=4, m=1)
    costs = build_cost_matrix(inst)
    with pytest.raises(ValueError):
        route_cluster(inst, costs, set(), 1)
    with pytest.raises(ValueError):
        route_cluster(inst, costs, {1, 2}, 3)


def test_route_never_beats_single_drone_oracle_on_the_cluster():
    inst = random_instance(seed=93, n=10, m=3)
    costs = build_cost_matrix(inst)
    clustering = cluster_assets(inst, costs, 3)
    for median in clustering.medians:
        members = clustering.members(median)
        route = route_cluster(inst, costs, members, median)
        sub = sub_instance(inst, members, num_drones=1)
        oracle = solve_bruteforce(sub)
        assert route.duration >= oracle.incumbent.total_cost - 1e-9


def test_single_asset_heuristic_is_exact():
    inst = build_instance([(123.0, 45.0, 1.0, 30.0)], speed=20.0)
    heuristic = solve_gnn(inst)
    exact = solve_exact(inst)
    assert heuristic.total_cost == pytest.approx(exact.incumbent.total_cost,
                                                 abs=1e-9)


@pytest.mark.parametrize("n,m", [(10, 4), (14, 5), (18, 4), (22, 5), (25, 4),
                                 (30, 5)])
def test_heuristic_always_feasible_across_sizes(n, m):
    inst = random_instance(seed=n * 7 + m, n=n, m=m)
    solution = solve_gnn(inst)
    assert len(solution.routes) == m
    total, violations = evaluate_solution(inst, solution)
    assert is_feasible(violations)
    assert abs(total - solution.total_cost) <= 1e-9


def test_heuristic_never_beats_oracle():
    for seed in range(15):
        n = 5 + seed % 4
        m = 2 + seed % 2
        inst = random_instance(seed=seed + 500, n=n, m=m)
        if validate_instance(inst):
            continue
        oracle = solve_bruteforce(inst)
        heuristic = solve_gnn(inst)
        assert heuristic.total_cost >= oracle.incumbent.total_cost - 1e-9


def test_heuristic_deterministic():
    inst = random_instance(seed=94, n=23, m=5)  # local-search path
    assert solve_gnn(inst) == solve_gnn(inst)
    small = random_instance(seed=95, n=12, m=4)  # exact path
    assert solve_gnn(small) == solve_gnn(small)


def test_phase_two_is_a_pure_function_of_the_partition():
    inst = random_instance(seed=96, n=12, m=4)
    costs = build_cost_matrix(inst)
    clustering = cluster_assets(inst, costs, 4)
    solution = solve_gnn(inst)
    rebuilt = [route_cluster(inst, costs, clustering.members(m_), m_, drone_id=k)
               for k, m_ in enumerate(clustering.medians)]
    assert [r.stops for r in rebuilt] == [r.stops for r in solution.routes]


def test_gnn_rejects_more_drones_than_assets():
    inst = random_instance(seed=97, n=3, m=3)
    over = type(inst)(area_width=inst.area_width, area_height=inst.area_height,
                      depot_x=inst.depot_x, depot_y=inst.depot_y,
                      assets=inst.assets, catalog=inst.catalog,
                      num_drones=4, capacity=inst.capacity, speed=inst.speed,
                      endurance=inst.endurance)
    with pytest.raises(ValueError, match="m=4"):
        solve_gnn(over)


def test_gnn_reports_infeasible_demand():
    inst = build_instance([(1.0, 1.0, 9.0, 0.0)], capacity=5.0)
    with pytest.raises(ClusteringInfeasibleError):
        solve_gnn(inst)
