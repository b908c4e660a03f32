"""Optimistic planning for nonlinear systems with hybrid inputs and a minimum dwell time."""

from .benchmarks import LinearModel, NCSPendulumModel, PendulumModel, SirwModel
from .hybrid_sets import DwellState, Interval, SetNode, eligible_modes, is_dwell_valid
from .model import SystemModel, semimetric_bound, truncated_value
from .planners import (
    PlannerConfig,
    PlanningProblem,
    PlanResult,
    Planner,
    Variant,
    plan,
    receding_horizon_run,
)

__all__ = [
    "LinearModel",
    "NCSPendulumModel",
    "PendulumModel",
    "SirwModel",
    "DwellState",
    "Interval",
    "SetNode",
    "eligible_modes",
    "is_dwell_valid",
    "SystemModel",
    "semimetric_bound",
    "truncated_value",
    "PlannerConfig",
    "PlanningProblem",
    "PlanResult",
    "Planner",
    "Variant",
    "plan",
    "receding_horizon_run",
]
