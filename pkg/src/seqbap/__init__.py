"""Sequential bottleneck task assignment with robustness margins and safe sets."""
from __future__ import annotations

from .core import (
    Assignment,
    SubgraphSpec,
    WeightMatrix,
    admissible,
    assignment_max_weight,
    bottleneck_edges,
    bottleneck_value,
    max_margin_edges_and_margin,
    min_bottleneck_assignment,
    summarize,
    weights_equal,
)
from .errors import (
    GridMismatch,
    InadmissibleAssignment,
    Infeasible,
    MarginTooSmall,
    NotRobust,
    SeqbapError,
    SizeGuard,
)
from .safesets import SafeSchedule, build_schedule, nonemptiness_check, safe_membership, safe_set
from .scenario import Metric, Scenario, build_weights, random_scenario
from .sequential import (
    SequentialResult,
    check_prop2,
    check_prop3,
    is_robust_lexicographic,
    lex_compare,
    sequential_assign,
)
from .simulator import SimConfig, Trajectory, simulate, verify_run

__all__ = [
    "Assignment", "SubgraphSpec", "WeightMatrix", "admissible", "assignment_max_weight",
    "bottleneck_edges", "bottleneck_value", "max_margin_edges_and_margin",
    "min_bottleneck_assignment", "summarize", "weights_equal",
    "GridMismatch", "InadmissibleAssignment", "Infeasible", "MarginTooSmall", "NotRobust",
    "SeqbapError", "SizeGuard",
    "SafeSchedule", "build_schedule", "nonemptiness_check", "safe_membership", "safe_set",
    "Metric", "Scenario", "build_weights", "random_scenario",
    "SequentialResult", "check_prop2", "check_prop3", "is_robust_lexicographic", "lex_compare",
    "sequential_assign",
    "SimConfig", "Trajectory", "simulate", "verify_run",
]
