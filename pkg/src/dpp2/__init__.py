"""Decentralized proximal primal-dual optimization with double privacy protection.

A simulation library and experiment CLI for nonconvex sum-utility
minimization over multi-agent networks: the algorithm core, its
parameter-feasibility machinery, Lyapunov diagnostics, epsilon
differential-privacy accounting, and a reproducible benchmark harness.
"""

from .algorithm import (
    AlgState,
    GradientBlowupError,
    TraceConfig,
    initial_state,
    run,
    step,
    step_equivalent,
)
from .diagnostics import (
    DenseAnalysis,
    FitReport,
    Trace,
    optimality_gap,
    rate_fit,
)
from .graph import (
    GraphConnectivityError,
    Network,
    apply_L,
    build_laplacian,
    complete_edges,
    cycle_edges,
    load_edge_list,
    path_edges,
    random_geometric_graph,
    save_edge_list,
)
from .privacy import (
    BudgetReport,
    NoiseSchedule,
    NoiseStreams,
    SelectionReport,
    dp_budget,
    dp_budget_terms,
    laplace_sample,
    select_dp_parameters,
)
from .problems import (
    Dataset,
    Problem,
    generate_dataset,
    load_dataset,
    logistic_nonconvex,
    quadratic_from_data,
    quadratic_pl,
    save_dataset,
)
from .theory import (
    AlgoParams,
    DerivedConstants,
    EtaSchedule,
    search_feasible_parameters,
    validate_parameters,
)

__version__ = "0.1.0"

__all__ = [
    "AlgState",
    "AlgoParams",
    "BudgetReport",
    "Dataset",
    "DenseAnalysis",
    "DerivedConstants",
    "EtaSchedule",
    "FitReport",
    "GradientBlowupError",
    "GraphConnectivityError",
    "Network",
    "NoiseSchedule",
    "NoiseStreams",
    "Problem",
    "SelectionReport",
    "Trace",
    "TraceConfig",
    "apply_L",
    "build_laplacian",
    "complete_edges",
    "cycle_edges",
    "dp_budget",
    "dp_budget_terms",
    "generate_dataset",
    "initial_state",
    "laplace_sample",
    "load_dataset",
    "load_edge_list",
    "logistic_nonconvex",
    "optimality_gap",
    "path_edges",
    "quadratic_from_data",
    "quadratic_pl",
    "random_geometric_graph",
    "rate_fit",
    "run",
    "save_dataset",
    "save_edge_list",
    "search_feasible_parameters",
    "select_dp_parameters",
    "step",
    "step_equivalent",
    "validate_parameters",
]
