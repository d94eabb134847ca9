"""Scenario documents: channels, risk model, policies, automaton and profiles.

A scenario is loaded from YAML (or an equivalent dict) and validated in one
pass; every failure raises :class:`ScenarioError` carrying the dotted path
of the offending field.
"""

from __future__ import annotations

import copy
import fnmatch
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import yaml

from .errors import ScenarioError
from .state import (
    CANONICAL_CHANNELS,
    LOC_KEY,
    AdmissibilityProfile,
    ApproximationProfile,
    Channel,
    Decision,
    ExternalProjection,
    InstitutionState,
    PolicyUpdate,
    Provenance,
    StrategyClassSpec,
    TopologyGraph,
)

SCHEMA = "govkernel.scenario/1"


# ---------------------------------------------------------------- risk model


@dataclass(frozen=True)
class RiskModel:
    r_classes: Tuple[str, ...]
    channel_labeling: Mapping[str, str]
    w_step: Mapping[str, Fraction]
    w_class: Mapping[str, Fraction]

    def rank(self, cls: str) -> int:
        return self.r_classes.index(cls)

    def step_weight(self, symbol) -> Fraction:
        """``w_step`` on a step event; ``None`` is the empty step."""
        if symbol is None:
            return Fraction(0)
        _, cls = symbol
        return self.w_step[cls]

    def validate(self, path="risk"):
        if not self.r_classes:
            raise ScenarioError(f"{path}.classes", "at least one risk class required")
        for table, name in ((self.w_step, "w_step"), (self.w_class, "w_class")):
            for cls, w in table.items():
                if cls not in self.r_classes:
                    raise ScenarioError(f"{path}.{name}.{cls}", "unknown risk class")
                if w < 0:
                    raise ScenarioError(f"{path}.{name}.{cls}", "weights must be non-negative")
        for cls in self.r_classes:
            if cls not in self.w_step:
                raise ScenarioError(f"{path}.w_step.{cls}", "missing weight")
            if cls not in self.w_class:
                raise ScenarioError(f"{path}.w_class.{cls}", "missing weight")
            if self.w_class[cls] != self.w_step[cls]:
                raise ScenarioError(f"{path}.w_class.{cls}", "must equal w_step on the same class")
        ws = [self.w_step[c] for c in self.r_classes]
        if any(a > b for a, b in zip(ws, ws[1:])):
            raise ScenarioError(f"{path}.w_step", "must be monotone in the declared class order")
        for ch, cls in self.channel_labeling.items():
            if cls not in self.r_classes:
                raise ScenarioError(f"{path}.labeling.{ch}", f"unknown risk class {cls!r}")


# ------------------------------------------------------------------ policies


@dataclass(frozen=True)
class Rule:
    channel: str
    decision: Decision
    max_risk: Optional[str] = None
    over_risk: Optional[Decision] = None
    requires: Tuple[str, ...] = ()
    budget_floor: int = 0


@dataclass(frozen=True)
class Policy:
    version: str
    rules: Tuple[Rule, ...] = ()
    default: Decision = Decision.REJECT
    labeling: Mapping[str, str] = field(default_factory=dict)
    risk_order: Tuple[str, ...] = ()


# ----------------------------------------------------------------- automaton


@dataclass(frozen=True)
class Delta:
    int_set: Mapping = field(default_factory=dict)
    int_del: Tuple[str, ...] = ()
    ext_set: Mapping = field(default_factory=dict)
    ext_del: Tuple[str, ...] = ()
    budget: int = 0
    add_nodes: Tuple[str, ...] = ()
    add_vertices: Tuple[str, ...] = ()
    remove_vertices: Tuple[str, ...] = ()
    add_edges: Tuple[Tuple[str, str], ...] = ()
    remove_edges: Tuple[Tuple[str, str], ...] = ()
    outbox: Tuple[str, ...] = ()
    commit: Tuple[str, ...] = ()
    world_obs: Mapping = field(default_factory=dict)
    policy: Optional[str] = None
    t_ext: Optional[Provenance] = None
    t_int: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ActionSpec:
    id: str
    node: str
    channel: Optional[str] = None
    payload: str = ""
    guard: Optional[frozenset] = None
    requires_caps: Tuple[str, ...] = ()
    delta: Delta = Delta()
    branches: Tuple[Tuple[Fraction, str], ...] = ()
    stimulated: bool = False

    def admissible(self, version: str, caps=()) -> bool:
        if self.guard is not None and version not in self.guard:
            return False
        return all(c in caps for c in self.requires_caps)


@dataclass(frozen=True)
class ScenarioAutomaton:
    states: Tuple[str, ...]
    actions: Mapping[str, Tuple[ActionSpec, ...]]
    initial: str
    policies: Mapping[str, Policy]

    def action(self, act_id: str) -> ActionSpec:
        for acts in self.actions.values():
            for a in acts:
                if a.id == act_id:
                    return a
        raise KeyError(act_id)

    def admissible(self, node: str, version: str, caps=()) -> List[ActionSpec]:
        return [a for a in self.actions.get(node, ()) if a.admissible(version, caps)]


@dataclass(frozen=True)
class CapabilityVertex:
    id: str
    risk_class: str
    chi: Fraction
    nu: Fraction


@dataclass(frozen=True)
class CapabilityGraph:
    vertices: Tuple[CapabilityVertex, ...] = ()
    edges: frozenset = frozenset()
    roots: frozenset = frozenset()

    def __post_init__(self):
        ids = {v.id for v in self.vertices}
        for v in self.vertices:
            if not (0 <= v.chi <= 1 and 0 <= v.nu <= 1):
                raise ValueError(f"vertex {v.id!r}: chi and nu must lie in [0, 1]")
        if not self.roots <= ids:
            raise ValueError("roots must be vertices")
        for a, b in self.edges:
            if a not in ids or b not in ids:
                raise ValueError(f"edge {(a, b)} references an unknown vertex")


@dataclass(frozen=True)
class Injection:
    kind: str
    at_step: int = 0
    # LEDGER_TAMPER: byte offset within the record body
    offset: Optional[int] = None


@dataclass
class Scenario:
    name: str
    channels: Mapping[str, Channel]
    risk: RiskModel
    automaton: ScenarioAutomaton
    admissibility: AdmissibilityProfile
    approximation: ApproximationProfile
    regions: Mapping[str, str]
    encoding: Optional[Mapping[str, Mapping[str, Tuple[str, str]]]]
    initial_state: InstitutionState
    flags: Mapping = field(default_factory=dict)
    driver: Mapping = field(default_factory=dict)
    run: Mapping = field(default_factory=dict)
    exogenous: Tuple = ()
    capability_graph: Optional[CapabilityGraph] = None
    h_cap: int = 1
    injection: Optional[Injection] = None
    source: dict = field(default_factory=dict, repr=False)

    @property
    def compliant(self) -> bool:
        return self.injection is None

    @property
    def policies(self) -> Mapping[str, Policy]:
        return self.automaton.policies

    def labeling_for(self, version: str) -> Mapping[str, str]:
        pol = self.policies.get(version)
        out = dict(self.risk.channel_labeling)
        if pol is not None:
            out.update(pol.labeling)
        return out

    def risk_class(self, channel: str, version: str) -> str:
        lab = self.labeling_for(version)
        if channel in lab:
            return lab[channel]
        parent = self.channels[channel].parent
        if parent in lab:
            return lab[parent]
        return self.risk.r_classes[0]

    def symbol(self, channel: Optional[str], version: str):
        """Trace symbol for ``channel`` under ``version``.

        Canonical ``(parent, class)`` when the version has a declared
        encoding, ``(channel_id, class)`` otherwise.
        """
        if channel is None:
            return None
        if self.encoding is not None and version in self.encoding:
            table = self.encoding[version]
            if channel in table:
                return table[channel]
            return (self.channels[channel].parent, self.risk_class(channel, version))
        return (channel, self.risk_class(channel, version))

    def alphabet_id(self, version: str) -> str:
        if self.encoding is not None and version in self.encoding:
            return "canonical"
        return f"raw:{version}"

    def caps_of(self, state: InstitutionState) -> frozenset:
        prefix = self.regions["caps"]
        return frozenset(k for k in state.s_int if k.startswith(prefix))


# ------------------------------------------------------------------- loading


def _frac(value, path) -> Fraction:
    if isinstance(value, bool):
        raise ScenarioError(path, "expected a rational number")
    if isinstance(value, float):
        raise ScenarioError(path, "floats are not accepted; write a rational like '1/3'")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ScenarioError(path, f"not a rational number: {value!r}") from None


def _int(value, path, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be >= {minimum}")
    return value


def _str_list(value, path) -> Tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ScenarioError(path, "expected a list of strings")
    return tuple(value)


def _store(value, path) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected a mapping")
    for k, v in value.items():
        if not isinstance(k, str):
            raise ScenarioError(f"{path}.{k}", "keys must be strings")
        if isinstance(v, bool) or not isinstance(v, (str, int)):
            raise ScenarioError(f"{path}.{k}", "values must be strings or integers")
    return dict(value)


def _decision(value, path) -> Decision:
    try:
        return Decision(value)
    except ValueError:
        raise ScenarioError(path, f"decision must be one of ALLOW/REJECT/QUARANTINE, got {value!r}") from None


def _edges(value, path):
    out = []
    for i, e in enumerate(value or []):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise ScenarioError(f"{path}[{i}]", "edge must be a [from, to] pair")
        out.append((e[0], e[1]))
    return tuple(out)


def _load_channels(doc) -> Dict[str, Channel]:
    chans = {c: Channel.canonical(c) for c in CANONICAL_CHANNELS}
    for i, entry in enumerate(doc.get("channels") or []):
        path = f"channels[{i}]"
        if not isinstance(entry, dict) or "id" not in entry:
            raise ScenarioError(path, "channel entry needs an id")
        cid = entry["id"]
        parent = entry.get("parent", cid if cid in CANONICAL_CHANNELS else None)
        if parent is None:
            raise ScenarioError(f"{path}.parent", f"refined channel {cid!r} must declare a canonical parent")
        if parent not in CANONICAL_CHANNELS:
            raise ScenarioError(f"{path}.parent", f"{parent!r} is not a canonical channel")
        if cid in CANONICAL_CHANNELS and parent != cid:
            raise ScenarioError(f"{path}.parent", "canonical channels are their own parent")
        chans[cid] = Channel(cid, parent)
    return chans


def _load_risk(doc) -> RiskModel:
    r = doc.get("risk")
    if not isinstance(r, dict):
        raise ScenarioError("risk", "risk model section is required")
    classes = _str_list(r.get("classes"), "risk.classes")
    w_step = {k: _frac(v, f"risk.w_step.{k}") for k, v in (r.get("w_step") or {}).items()}
    w_class_doc = r.get("w_class")
    w_class = dict(w_step) if w_class_doc is None else {
        k: _frac(v, f"risk.w_class.{k}") for k, v in w_class_doc.items()
    }
    labeling = r.get("labeling") or {}
    if not isinstance(labeling, dict):
        raise ScenarioError("risk.labeling", "expected a mapping channel -> class")
    model = RiskModel(tuple(classes), dict(labeling), w_step, w_class)
    model.validate()
    return model


def _load_policies(doc, channels, risk) -> Dict[str, Policy]:
    pols = doc.get("policies")
    if not isinstance(pols, dict) or not pols:
        raise ScenarioError("policies", "at least one policy version is required")
    out = {}
    for version, body in pols.items():
        path = f"policies.{version}"
        body = body or {}
        rules = []
        for i, r in enumerate(body.get("rules") or []):
            rp = f"{path}.rules[{i}]"
            if not isinstance(r, dict) or "channel" not in r or "decision" not in r:
                raise ScenarioError(rp, "rule needs channel and decision")
            max_risk = r.get("max_risk")
            if max_risk is not None and max_risk not in risk.r_classes:
                raise ScenarioError(f"{rp}.max_risk", f"unknown risk class {max_risk!r}")
            rules.append(
                Rule(
                    channel=str(r["channel"]),
                    decision=_decision(r["decision"], f"{rp}.decision"),
                    max_risk=max_risk,
                    over_risk=None if r.get("over_risk") is None else _decision(r["over_risk"], f"{rp}.over_risk"),
                    requires=_str_list(r.get("requires"), f"{rp}.requires"),
                    budget_floor=_int(r.get("budget_floor", 0), f"{rp}.budget_floor", 0),
                )
            )
        labeling = body.get("labeling") or {}
        for ch, cls in labeling.items():
            if ch not in channels:
                raise ScenarioError(f"{path}.labeling.{ch}", "unknown channel")
            if cls not in risk.r_classes:
                raise ScenarioError(f"{path}.labeling.{ch}", f"unknown risk class {cls!r}")
        out[str(version)] = Policy(
            version=str(version),
            rules=tuple(rules),
            default=_decision(body.get("default", "REJECT"), f"{path}.default"),
            labeling=dict(labeling),
            risk_order=tuple(risk.r_classes),
        )
    return out


def _load_delta(d, path) -> Delta:
    d = d or {}
    if not isinstance(d, dict):
        raise ScenarioError(path, "expected a mapping")
    known = set(Delta.__dataclass_fields__)
    for k in d:
        if k not in known:
            raise ScenarioError(f"{path}.{k}", "unknown delta field")
    t_ext = d.get("t_ext")
    if t_ext is not None:
        try:
            t_ext = Provenance(t_ext)
        except ValueError:
            raise ScenarioError(f"{path}.t_ext", f"unknown provenance {t_ext!r}") from None
    return Delta(
        int_set=_store(d.get("int_set"), f"{path}.int_set"),
        int_del=_str_list(d.get("int_del"), f"{path}.int_del"),
        ext_set=_store(d.get("ext_set"), f"{path}.ext_set"),
        ext_del=_str_list(d.get("ext_del"), f"{path}.ext_del"),
        budget=_int(d.get("budget", 0), f"{path}.budget"),
        add_nodes=_str_list(d.get("add_nodes"), f"{path}.add_nodes"),
        add_vertices=_str_list(d.get("add_vertices"), f"{path}.add_vertices"),
        remove_vertices=_str_list(d.get("remove_vertices"), f"{path}.remove_vertices"),
        add_edges=_edges(d.get("add_edges"), f"{path}.add_edges"),
        remove_edges=_edges(d.get("remove_edges"), f"{path}.remove_edges"),
        outbox=_str_list(d.get("outbox"), f"{path}.outbox"),
        commit=_str_list(d.get("commit"), f"{path}.commit"),
        world_obs=_store(d.get("world_obs"), f"{path}.world_obs"),
        policy=d.get("policy"),
        t_ext=t_ext,
        t_int=_str_list(d.get("t_int"), f"{path}.t_int"),
    )


def _load_automaton(doc, channels, policies) -> ScenarioAutomaton:
    auto = doc.get("automaton")
    if not isinstance(auto, dict):
        raise ScenarioError("automaton", "automaton section is required")
    nodes = auto.get("nodes")
    if not isinstance(nodes, dict) or not nodes:
        raise ScenarioError("automaton.nodes", "at least one node is required")
    states = tuple(str(n) for n in nodes)
    initial = auto.get("initial", states[0])
    if initial not in states:
        raise ScenarioError("automaton.initial", f"unknown node {initial!r}")
    seen = set()
    actions = {}
    for node, body in nodes.items():
        body = body or {}
        acts = []
        for i, a in enumerate(body.get("actions") or []):
            ap = f"automaton.nodes.{node}.actions[{i}]"
            if not isinstance(a, dict) or "id" not in a:
                raise ScenarioError(ap, "action needs an id")
            aid = str(a["id"])
            if aid in seen:
                raise ScenarioError(f"{ap}.id", f"duplicate action id {aid!r}")
            seen.add(aid)
            ch = a.get("channel")
            if ch is not None and ch not in channels:
                raise ScenarioError(f"{ap}.channel", f"undeclared channel {ch!r}")
            guard = a.get("guard")
            if guard is not None:
                guard = frozenset(_str_list(guard, f"{ap}.guard"))
                for v in guard:
                    if v not in policies:
                        raise ScenarioError(f"{ap}.guard", f"unknown policy version {v!r}")
            raw_br = a.get("branches")
            if raw_br is None:
                branches = ((Fraction(1), str(node)),)
            else:
                branches = []
                for j, b in enumerate(raw_br):
                    bp = f"{ap}.branches[{j}]"
                    if not (isinstance(b, list) and len(b) == 2):
                        raise ScenarioError(bp, "branch must be [probability, successor]")
                    p = _frac(b[0], bp)
                    if p < 0:
                        raise ScenarioError(bp, "probability must be non-negative")
                    if b[1] not in nodes:
                        raise ScenarioError(bp, f"unknown successor {b[1]!r}")
                    branches.append((p, str(b[1])))
                branches = tuple(branches)
                if sum(p for p, _ in branches) != 1:
                    raise ScenarioError(f"{ap}.branches", "probabilities must sum to exactly 1")
            delta = _load_delta(a.get("delta"), f"{ap}.delta")
            if delta.policy is not None and delta.policy not in policies:
                raise ScenarioError(f"{ap}.delta.policy", f"unknown policy version {delta.policy!r}")
            acts.append(
                ActionSpec(
                    id=aid,
                    node=str(node),
                    channel=ch,
                    payload=str(a.get("payload", "")),
                    guard=guard,
                    requires_caps=_str_list(a.get("requires_caps"), f"{ap}.requires_caps"),
                    delta=delta,
                    branches=branches,
                    stimulated=bool(a.get("stimulated", False)),
                )
            )
        actions[str(node)] = tuple(acts)
    return ScenarioAutomaton(states, actions, initial, policies)


def _load_encoding(doc, channels, risk, policies):
    enc = doc.get("encoding")
    if enc is None:
        return None
    if enc == "auto":
        return {v: {} for v in policies}
    if not isinstance(enc, dict):
        raise ScenarioError("encoding", "expected 'auto' or a mapping version -> table")
    out = {}
    for version, table in enc.items():
        if version not in policies:
            raise ScenarioError(f"encoding.{version}", "unknown policy version")
        t = {}
        for ch, sym in (table or {}).items():
            p = f"encoding.{version}.{ch}"
            if ch not in channels:
                raise ScenarioError(p, "unknown channel")
            parts = str(sym).split(":")
            if len(parts) != 2 or parts[0] not in CANONICAL_CHANNELS or parts[1] not in risk.r_classes:
                raise ScenarioError(p, "symbol must be '<canonical channel>:<risk class>'")
            t[ch] = (parts[0], parts[1])
        out[str(version)] = t
    return out


def _load_profiles(doc, policies):
    p = doc.get("profiles") or {}
    adm = p.get("admissibility") or {}
    version = adm.get("policy_version", next(iter(policies)))
    if version not in policies:
        raise ScenarioError("profiles.admissibility.policy_version", f"unknown policy version {version!r}")
    try:
        u_policy = PolicyUpdate(adm.get("u_policy", "VERSIONED"))
    except ValueError:
        raise ScenarioError("profiles.admissibility.u_policy", "must be FIXED or VERSIONED") from None
    deterministic = adm.get("deterministic", True)
    if deterministic is not True:
        raise ScenarioError("profiles.admissibility.deterministic", "only deterministic strategy tables are supported")
    admissibility = AdmissibilityProfile(
        id=str(adm.get("id", "A0")),
        policy_version=version,
        strategy_class=StrategyClassSpec(
            memory_bound=_int(adm.get("memory_bound", 0), "profiles.admissibility.memory_bound", 0)
        ),
        horizon_H=_int(adm.get("horizon_H", 2), "profiles.admissibility.horizon_H", 1),
        u_policy=u_policy,
    )
    ap = p.get("approximation") or {}
    eps = _frac(ap.get("epsilon_expand_norm", "1/10"), "profiles.approximation.epsilon_expand_norm")
    if eps <= 0:
        raise ScenarioError("profiles.approximation.epsilon_expand_norm", "must be positive")
    dmu = _frac(ap.get("delta_mu", 0), "profiles.approximation.delta_mu")
    if dmu < 0:
        raise ScenarioError("profiles.approximation.delta_mu", "must be non-negative")
    approximation = ApproximationProfile(
        L=_int(ap.get("L", admissibility.strategy_class.memory_bound), "profiles.approximation.L", 0),
        delta_mu=dmu,
        epsilon_expand_norm=eps,
    )
    return admissibility, approximation


def _load_initial_state(doc, automaton, admissibility) -> InstitutionState:
    init = doc.get("initial_state") or {}
    s_int = _store(init.get("s_int"), "initial_state.s_int")
    if LOC_KEY in s_int:
        raise ScenarioError(f"initial_state.s_int.{LOC_KEY}", "reserved key")
    s_int[LOC_KEY] = automaton.initial
    topo = init.get("topology") or {}
    try:
        topology = TopologyGraph(
            N=frozenset(_str_list(topo.get("N"), "initial_state.topology.N")),
            V=frozenset(_str_list(topo.get("V"), "initial_state.topology.V")),
            E=frozenset(_edges(topo.get("E"), "initial_state.topology.E")),
            allow_self_loops=bool(topo.get("allow_self_loops", False)),
        )
    except ValueError as exc:
        raise ScenarioError("initial_state.topology", str(exc)) from None
    world = _store(init.get("world_obs"), "initial_state.world_obs")
    return InstitutionState(
        s_int=s_int,
        s_ext=_store(init.get("s_ext"), "initial_state.s_ext"),
        s_budget=_int(init.get("budget", 0), "initial_state.budget", 0),
        s_topo=topology,
        adm=admissibility,
        boundary=ExternalProjection(world_obs=world),
    )


def _load_capability_graph(doc, risk):
    g = doc.get("capability_graph")
    if g is None:
        return None, 1
    verts = []
    for i, v in enumerate(g.get("vertices") or []):
        p = f"capability_graph.vertices[{i}]"
        if v.get("risk_class") not in risk.r_classes:
            raise ScenarioError(f"{p}.risk_class", "unknown risk class")
        verts.append(
            CapabilityVertex(
                id=str(v["id"]),
                risk_class=v["risk_class"],
                chi=_frac(v.get("chi", 1), f"{p}.chi"),
                nu=_frac(v.get("nu", 1), f"{p}.nu"),
            )
        )
    try:
        graph = CapabilityGraph(
            tuple(verts),
            frozenset(_edges(g.get("edges"), "capability_graph.edges")),
            frozenset(_str_list(g.get("roots"), "capability_graph.roots")),
        )
    except ValueError as exc:
        raise ScenarioError("capability_graph", str(exc)) from None
    return graph, _int(g.get("h_cap", 1), "capability_graph.h_cap", 1)


INJECTION_KINDS = ("BYPASS", "SPLIT_PHASE", "LEDGER_TAMPER")


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario document must be a mapping")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ScenarioError("schema", f"unsupported schema {schema!r}")
    channels = _load_channels(doc)
    risk = _load_risk(doc)
    for ch in risk.channel_labeling:
        if ch not in channels:
            raise ScenarioError(f"risk.labeling.{ch}", "unknown channel")
    policies = _load_policies(doc, channels, risk)
    automaton = _load_automaton(doc, channels, policies)
    regions = doc.get("regions")
    if not isinstance(regions, dict) or "caps" not in regions or "tools" not in regions:
        raise ScenarioError("regions", "caps and tools key-prefix regions must be declared")
    encoding = _load_encoding(doc, channels, risk, policies)
    admissibility, approximation = _load_profiles(doc, policies)
    initial_state = _load_initial_state(doc, automaton, admissibility)
    graph, h_cap = _load_capability_graph(doc, risk)

    exo = []
    for i, e in enumerate(doc.get("exogenous") or []):
        exo.append((_int(e.get("step"), f"exogenous[{i}].step", 0), str(e.get("message", f"exo{i}"))))

    injection = None
    inj = doc.get("injection")
    if inj is not None:
        if inj.get("kind") not in INJECTION_KINDS:
            raise ScenarioError("injection.kind", f"must be one of {', '.join(INJECTION_KINDS)}")
        injection = Injection(
            kind=inj["kind"],
            at_step=_int(inj.get("at_step", 0), "injection.at_step", 0),
            offset=inj.get("offset"),
        )

    driver = dict(doc.get("driver") or {"mode": "random"})
    if driver.get("mode", "random") not in ("random", "script", "first"):
        raise ScenarioError("driver.mode", "must be random, script or first")
    if driver.get("mode") == "script":
        for i, aid in enumerate(driver.get("script") or []):
            try:
                automaton.action(aid)
            except KeyError:
                raise ScenarioError(f"driver.script[{i}]", f"unknown action {aid!r}") from None

    return Scenario(
        name=str(doc.get("name", "scenario")),
        channels=channels,
        risk=risk,
        automaton=automaton,
        admissibility=admissibility,
        approximation=approximation,
        regions={"caps": str(regions["caps"]), "tools": str(regions["tools"])},
        encoding=encoding,
        initial_state=initial_state,
        flags=dict(doc.get("flags") or {}),
        driver=driver,
        run=dict(doc.get("run") or {}),
        exogenous=tuple(sorted(exo)),
        capability_graph=graph,
        h_cap=h_cap,
        injection=injection,
        source=copy.deepcopy(doc),
    )


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError("<root>", f"not valid YAML: {exc}") from None
    return scenario_from_dict(doc)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.source, sort_keys=False)


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "fixtures" / name


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_path(name))


# --------------------------------------------------------------- system class

OCP_FLAGS = ("state_accumulation", "env_feedback", "external_causality", "iterative_autonomy")
CORE_FLAGS = ("generative_substrate", "artifact_state", "policy_mediated_boundary")
AMPLIFIERS = ("objective_self_direction", "expansion_capability")


def classify_system(flags: Mapping) -> str:
    """Most specific system class whose defining flags all hold."""
    if not all(flags.get(f) for f in OCP_FLAGS):
        return "NONE"
    if not all(flags.get(f) for f in CORE_FLAGS):
        return "OCP"
    if any(flags.get(f) for f in AMPLIFIERS):
        return "AUTONOMOUS_AI_SPACE"
    return "AI_SPACE_CORE"


def check_system_claims(scenario: Scenario) -> List[str]:
    """Claimed class flags that the automaton cannot back up."""
    flags = scenario.flags.get("system_class") or {}
    acts = [a for group in scenario.automaton.actions.values() for a in group]
    caps, tools = scenario.regions["caps"], scenario.regions["tools"]
    problems = []
    if flags.get("external_causality") and not any(a.delta.ext_set or a.delta.ext_del for a in acts):
        problems.append("external_causality claimed but no action writes s_ext")

    def expands(a):
        d = a.delta
        touched = list(d.int_set) + list(d.int_del)
        return (
            any(k.startswith((caps, tools)) for k in touched)
            or d.add_vertices or d.remove_vertices or d.add_edges or d.remove_edges
            or d.policy is not None
        )

    if flags.get("expansion_capability") and not any(expands(a) for a in acts):
        problems.append("expansion_capability claimed but no action changes caps, tools, topology or policy")
    if flags.get("policy_mediated_boundary") and not scenario.policies:
        problems.append("policy_mediated_boundary claimed but no policies declared")
    if flags.get("iterative_autonomy") and len(acts) == 0:
        problems.append("iterative_autonomy claimed but the automaton has no actions")
    return problems


def match_channel(pattern: str, channel_id: str, parent: str) -> bool:
    return fnmatch.fnmatchcase(channel_id, pattern) or fnmatch.fnmatchcase(parent, pattern)
