"""Capacitated drone-routing toolkit: exact branch-and-bound, a two-phase
clustering heuristic, a brute-force oracle, and a seeded benchmark harness."""

from .model import (Asset, AssetType, CostMatrix, GeneratorInfo, Instance,
                    Route, Solution, UnknownAssetError, Violation,
                    ViolationKind, build_cost_matrix, evaluate_solution,
                    is_feasible, make_route, validate_instance)
from .scenario import (DepotPlacement, ScenarioConfig, default_catalog,
                       generate_instance, demo_config, spread_counts)
from .mip import (Assignment, IntegerProgram, LinearConstraint, Relation,
                  build_cvrp_model, decode_assignment, encode_solution,
                  export_lp, objective_value, verify_assignment)
from .exact import (PartialState, SolveConfig, SolveResult, SolveStatus,
                    lower_bound, root_state, solve_exact, state_from_solution)
from .bruteforce import solve_bruteforce
from .gnn import (Clustering, ClusteringInfeasibleError, cluster_assets,
                  clustering_objective, route_cluster, solve_gnn)
from .io_formats import (FormatError, parse_cvrplib, parse_instance,
                         parse_solution, write_instance, write_solution)
from .bench import (ExperimentConfig, RunRecord, compute_cdf, emit_report,
                    run_comparison)

__version__ = "0.1.0"
