"""Boundary-mediation kernel for simulated institutions.

Typical use::

    from govkernel import load_fixture, run_scenario, audit_governability
    sc = load_fixture("connector_install.yaml")
    res = run_scenario(sc)
    report = audit_governability(res.log, res.ledger, sc.policies)
"""

from .analysis import audit_governability
from .errors import (
    AdjudicationError,
    ComparisonError,
    GovKernelError,
    LedgerError,
    OutOfBandAppend,
    ReplayMismatch,
    ReplayUnavailable,
    ResourceBudgetError,
    ScenarioError,
    UnlabeledTransitionError,
)
from .kernels import BACKEND
from .ledger import Ledger, WitnessRecord, replay, verify_chain
from .membrane import Executor, RunResult, inject_violation, run_scenario
from .policy import MediationRequest, adjudicate
from .reach import Budget, enumerate_reach, proxy_reach_measure, risk_weighted_reach
from .runlog import RunLog
from .scenario import Scenario, load_fixture, load_scenario, scenario_from_dict
from .state import InstitutionState, commit_ext, commit_pi, core_eq
from .tags import Tag, tag_set

__version__ = "0.1.0"

__all__ = [
    "AdjudicationError",
    "BACKEND",
    "Budget",
    "ComparisonError",
    "Executor",
    "GovKernelError",
    "InstitutionState",
    "Ledger",
    "LedgerError",
    "MediationRequest",
    "OutOfBandAppend",
    "ReplayMismatch",
    "ReplayUnavailable",
    "ResourceBudgetError",
    "RunLog",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "Tag",
    "UnlabeledTransitionError",
    "WitnessRecord",
    "adjudicate",
    "audit_governability",
    "commit_ext",
    "commit_pi",
    "core_eq",
    "enumerate_reach",
    "inject_violation",
    "load_fixture",
    "load_scenario",
    "proxy_reach_measure",
    "replay",
    "risk_weighted_reach",
    "run_scenario",
    "scenario_from_dict",
    "tag_set",
    "verify_chain",
]
