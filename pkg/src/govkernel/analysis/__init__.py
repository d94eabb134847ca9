from .audit import CONSTITUTIVE, LAWS, REPORT_SCHEMA, AuditError, AuditReport, audit_governability
from .backlog import BacklogConfig, BacklogReport, arrival_load, simulate_backlog, uniform_arrivals
from .causation import CausationReport, check_task_causation, t_ext_growth_steps
from .collision import (
    Collision,
    ObserverModel,
    collision_guaranteed,
    emitted_trace,
    find_observer_collision,
    trace_bound,
)
from .scarcity import ScarcityConfig, ScarcityScenario, ScarcityTrace, simulate_scarcity

__all__ = [
    "AuditError",
    "AuditReport",
    "BacklogConfig",
    "BacklogReport",
    "CONSTITUTIVE",
    "CausationReport",
    "Collision",
    "LAWS",
    "ObserverModel",
    "REPORT_SCHEMA",
    "ScarcityConfig",
    "ScarcityScenario",
    "ScarcityTrace",
    "arrival_load",
    "audit_governability",
    "check_task_causation",
    "collision_guaranteed",
    "emitted_trace",
    "find_observer_collision",
    "simulate_backlog",
    "simulate_scarcity",
    "t_ext_growth_steps",
    "trace_bound",
    "uniform_arrivals",
]
