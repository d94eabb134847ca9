"""Institution state, boundary channels and the commit/equality predicates.

Every value here is treated as immutable once built. Stores are plain
dicts with string keys and ``str``/``int`` values; nothing in the package
mutates them after construction, new states are produced with
:func:`dataclasses.replace`.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Tuple

from .errors import UnlabeledTransitionError

CANONICAL_CHANNELS = ("net", "fs_shared", "exec", "money", "deploy", "comm", "spawn", "connect")

# s_int key holding the automaton control location
LOC_KEY = "@loc"


class Decision(str, enum.Enum):
    ALLOW = "ALLOW"
    REJECT = "REJECT"
    QUARANTINE = "QUARANTINE"


class Placement(str, enum.Enum):
    INSIDE = "INSIDE"
    BOUNDARY_COUPLED = "BOUNDARY_COUPLED"
    EXTERNAL = "EXTERNAL"


class PolicyUpdate(str, enum.Enum):
    FIXED = "FIXED"
    VERSIONED = "VERSIONED"


class Provenance(str, enum.Enum):
    EXOGENOUS = "EXOGENOUS"
    STIMULATED = "STIMULATED"
    ENDOGENOUS = "ENDOGENOUS"


@dataclass(frozen=True)
class Channel:
    id: str
    parent: str

    def __post_init__(self):
        if self.parent not in CANONICAL_CHANNELS:
            raise ValueError(f"channel {self.id!r}: parent {self.parent!r} is not canonical")

    @classmethod
    def canonical(cls, name: str) -> "Channel":
        return cls(name, name)


@dataclass(frozen=True)
class TopologyGraph:
    N: frozenset = frozenset()
    V: frozenset = frozenset()
    E: frozenset = frozenset()
    allow_self_loops: bool = False

    def __post_init__(self):
        if not self.V <= self.N:
            raise ValueError(f"topology vertices {sorted(self.V - self.N)} not in population")
        for a, b in self.E:
            if a not in self.V or b not in self.V:
                raise ValueError(f"edge {(a, b)} has an endpoint outside V")
            if a == b and not self.allow_self_loops:
                raise ValueError(f"self-loop on {a!r} not declared")

    def to_json(self):
        return {
            "N": sorted(self.N),
            "V": sorted(self.V),
            "E": sorted([a, b] for a, b in self.E),
        }


@dataclass(frozen=True)
class ExternalProjection:
    """Boundary-observable slots. List entries are ``(step, payload)`` pairs."""

    inbox: Tuple = ()
    outbox: Tuple = ()
    commit_ledger: Tuple = ()
    world_obs: Mapping = field(default_factory=dict)

    def to_json(self):
        return {
            "inbox": [list(e) for e in self.inbox],
            "outbox": [list(e) for e in self.outbox],
            "commit_ledger": [list(e) for e in self.commit_ledger],
            "world_obs": dict(sorted(self.world_obs.items())),
        }


@dataclass(frozen=True)
class StrategyClassSpec:
    memory_bound: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.memory_bound < 0:
            raise ValueError("memory_bound must be non-negative")


@dataclass(frozen=True)
class AdmissibilityProfile:
    id: str
    policy_version: str
    strategy_class: StrategyClassSpec = StrategyClassSpec()
    horizon_H: int = 1
    u_policy: PolicyUpdate = PolicyUpdate.VERSIONED

    def __post_init__(self):
        if self.horizon_H < 1:
            raise ValueError("horizon_H must be >= 1")

    def with_version(self, version: str) -> "AdmissibilityProfile":
        return replace(self, policy_version=version)


@dataclass(frozen=True)
class ApproximationProfile:
    L: int = 0
    delta_mu: object = 0
    epsilon_expand_norm: object = 1

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.delta_mu < 0:
            raise ValueError("delta_mu must be non-negative")
        if not self.epsilon_expand_norm > 0:
            raise ValueError("epsilon_expand_norm must be positive")


@dataclass(frozen=True)
class TaskEntry:
    task_id: str
    provenance: Provenance
    step: int
    trigger: str


@dataclass
class TaskLayers:
    """Internal and externally accountable task layers for one run.

    ``t_ext`` only grows; entries are appended through :meth:`insert_ext`.
    """

    t_int: set = field(default_factory=set)
    t_ext: list = field(default_factory=list)

    def insert_ext(self, task_id, provenance, step, trigger):
        entry = TaskEntry(task_id, Provenance(provenance), step, trigger)
        self.t_ext.append(entry)
        return entry


@dataclass(frozen=True)
class ComponentFlags:
    policy_control: bool = False
    stop_control: bool = False
    witness_coverage: bool = False
    membrane_mediated_access: bool = False


@dataclass(frozen=True)
class InstitutionState:
    s_int: Mapping = field(default_factory=dict)
    s_ext: Mapping = field(default_factory=dict)
    ledger_len: int = 0
    head_hash: str = "00" * 32
    s_budget: int = 0
    s_topo: TopologyGraph = TopologyGraph()
    adm: Optional[AdmissibilityProfile] = None
    step: int = 0
    boundary: ExternalProjection = ExternalProjection()

    def __post_init__(self):
        if self.s_budget < 0:
            raise ValueError("s_budget must be non-negative")
        if self.ledger_len < 0 or self.step < 0:
            raise ValueError("ledger_len and step must be non-negative")

    @property
    def loc(self):
        return self.s_int.get(LOC_KEY)

    def to_json(self):
        return {
            "s_int": dict(sorted(self.s_int.items())),
            "s_ext": dict(sorted(self.s_ext.items())),
            "ledger_len": self.ledger_len,
            "head_hash": self.head_hash,
            "s_budget": self.s_budget,
            "s_topo": self.s_topo.to_json(),
            "adm": None if self.adm is None else {"id": self.adm.id, "policy_version": self.adm.policy_version},
            "step": self.step,
            "boundary": self.boundary.to_json(),
        }


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def state_digest(state: InstitutionState) -> str:
    return hashlib.sha256(canonical_json(state.to_json())).hexdigest()


def region(store: Mapping, prefix: str) -> dict:
    """Sub-map of ``store`` whose keys start with ``prefix``."""
    return {k: v for k, v in store.items() if k.startswith(prefix)}


def project_ext(state: InstitutionState) -> ExternalProjection:
    return state.boundary


def _require_label(act):
    if act is None or act == "":
        raise UnlabeledTransitionError("every modeled transition must carry an action label")


def commit_pi(act, s: InstitutionState, s2: InstitutionState) -> bool:
    """Projected commit: the boundary projection changed across ``act``."""
    _require_label(act)
    return project_ext(s2) != project_ext(s)


def commit_ext(act, s: InstitutionState, s2: InstitutionState) -> bool:
    """First-order commit: the external world store changed across ``act``."""
    _require_label(act)
    return dict(s2.s_ext) != dict(s.s_ext)


def core_eq(s: InstitutionState, s2: InstitutionState) -> bool:
    # ledger_len, head_hash, adm, step and boundary are bookkeeping, not core
    return (
        dict(s.s_int) == dict(s2.s_int)
        and dict(s.s_ext) == dict(s2.s_ext)
        and s.s_budget == s2.s_budget
        and s.s_topo == s2.s_topo
    )


def classify_component(flags: ComponentFlags) -> Placement:
    if flags.policy_control and flags.stop_control and flags.witness_coverage:
        return Placement.INSIDE
    if flags.membrane_mediated_access:
        return Placement.BOUNDARY_COUPLED
    return Placement.EXTERNAL
