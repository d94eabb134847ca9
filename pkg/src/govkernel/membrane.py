"""The mediation surface and the single-writer scenario executor.

Every boundary-relevant act (one that emits on a channel, spends budget,
is a stimulated act, or would carry a nonempty tag set) is adjudicated,
witnessed and applied in one commit: the ledger append is the commit
point, and the state swap and run-log record follow it unconditionally.
Acts that are none of these are applied directly and logged unmediated.
"""

from __future__ import annotations

import copy
import math
import random
import threading
from dataclasses import dataclass, replace
from typing import List, Optional

from .errors import AdjudicationError, GovKernelError
from .ledger import Ledger
from .policy import INTERNAL_CHANNEL, MediationRequest, adjudicate
from .reach import DEFAULT_BUDGET, Budget, reach_from
from .runlog import RunLog
from .scenario import INJECTION_KINDS, ActionSpec, Scenario, scenario_from_dict
from .state import (
    LOC_KEY,
    Decision,
    ExternalProjection,
    InstitutionState,
    PolicyUpdate,
    Provenance,
    TaskLayers,
    TopologyGraph,
    commit_ext,
    commit_pi,
    state_digest,
)
from .tags import EMPTY, tag_set, tags_to_json


@dataclass(frozen=True)
class TransitionResult:
    decision: Optional[Decision]
    tag_set: frozenset
    witness_seq: Optional[int]
    state_after: InstitutionState


def apply_delta(s: InstitutionState, act: ActionSpec, succ: str) -> InstitutionState:
    d = act.delta
    s_int = dict(s.s_int)
    s_int.update(d.int_set)
    for k in d.int_del:
        s_int.pop(k, None)
    s_int[LOC_KEY] = succ
    s_ext = dict(s.s_ext)
    s_ext.update(d.ext_set)
    for k in d.ext_del:
        s_ext.pop(k, None)

    topo = s.s_topo
    removed = set(d.remove_vertices)
    V = (topo.V | set(d.add_vertices)) - removed
    E = {(a, b) for a, b in (topo.E | set(d.add_edges)) - set(d.remove_edges) if a not in removed and b not in removed}
    new_topo = TopologyGraph(
        N=topo.N | set(d.add_nodes) | set(d.add_vertices),
        V=frozenset(V),
        E=frozenset(E),
        allow_self_loops=topo.allow_self_loops,
    )
    b = s.boundary
    step = s.step
    boundary = ExternalProjection(
        inbox=b.inbox,
        outbox=b.outbox + tuple((step, m) for m in d.outbox),
        commit_ledger=b.commit_ledger + tuple((step, m) for m in d.commit),
        world_obs={**b.world_obs, **d.world_obs},
    )
    adm = s.adm if d.policy is None else s.adm.with_version(d.policy)
    return replace(
        s,
        s_int=s_int,
        s_ext=s_ext,
        s_budget=s.s_budget + d.budget,
        s_topo=new_topo,
        boundary=boundary,
        adm=adm,
        step=step + 1,
    )


class Executor:
    """Runs one scenario; the only holder of the ledger's append token."""

    def __init__(self, scenario: Scenario, seed: int = 0, ledger: Optional[Ledger] = None,
                 budget: Budget = DEFAULT_BUDGET):
        self.scenario = scenario
        self.rng = random.Random(seed)
        self.seed = seed
        self.ledger = ledger if ledger is not None else Ledger()
        self._token = self.ledger.bind_executor()
        self.budget = budget
        self.state = scenario.initial_state
        self.tasks = TaskLayers()
        self.quarantine: List[dict] = []
        self.incidents: List[dict] = []
        self.log = RunLog()
        self.injected_step: Optional[int] = None
        self._lock = threading.Lock()
        self._round = 0
        self._ext_seen = 0

    # -------------------------------------------------------------- helpers

    def caps(self, state=None):
        return self.scenario.caps_of(state or self.state)

    def _sample(self, act: ActionSpec) -> str:
        branches = [(p, s) for p, s in act.branches if p > 0]
        if len(branches) == 1:
            return branches[0][1]
        denom = math.lcm(*(p.denominator for p, _ in branches))
        draw = self.rng.randrange(denom)
        acc = 0
        for p, s in branches:
            acc += int(p * denom)
            if draw < acc:
                return s
        return branches[-1][1]

    def _reach_pair(self, s, s2):
        prof = s.adm
        m, H = prof.strategy_class.memory_bound, prof.horizon_H
        rb = reach_from(self.scenario, s.loc, s.adm.policy_version, m, H, self.caps(s), self.budget)
        ra = reach_from(self.scenario, s2.loc, s2.adm.policy_version, m, H, self.caps(s2), self.budget)
        return rb, ra

    def _staged(self, act: ActionSpec):
        s = self.state
        succ = self._sample(act)
        if s.s_budget + act.delta.budget < 0:
            # unaffordable: no successor state exists, adjudication rejects on cost
            return None, EMPTY
        staged = apply_delta(s, act, succ)
        rb = ra = None
        if act.delta.policy is not None and act.delta.policy != s.adm.policy_version:
            rb, ra = self._reach_pair(s, staged)
        tags = tag_set(act.id, s, staged, rb, ra, self.scenario.regions)
        return staged, tags

    def _request(self, act: ActionSpec, s: InstitutionState) -> MediationRequest:
        version = s.adm.policy_version
        if act.channel is None:
            channel = parent = INTERNAL_CHANNEL
            risk = self.scenario.risk.r_classes[0]
        else:
            channel = act.channel
            parent = self.scenario.channels[channel].parent
            risk = self.scenario.risk_class(channel, version)
        return MediationRequest(
            act=act.id,
            channel=channel,
            parent=parent,
            risk_class=risk,
            payload=act.payload,
            caps_snapshot=tuple(sorted(self.caps(s))),
            budget_snapshot=s.s_budget,
            cost=max(0, -act.delta.budget),
            policy_version=version,
        )

    def _record(self, kind, act_id, s, s2, decision, tags, witness_seq, mediated, stimulated=False, hooks=(),
                anchor_for=None):
        rec = {
            "kind": kind,
            "step": s.step,
            "act": act_id,
            "decision": None if decision is None else decision.value,
            "mediated": mediated,
            "tags": tags_to_json(tags),
            "witness_seq": witness_seq,
            "commit_pi": commit_pi(act_id, s, s2),
            "commit_ext": commit_ext(act_id, s, s2),
            "stimulated": stimulated,
            "hooks": list(hooks),
            "t_ext_len": len(self.tasks.t_ext),
            "inserted": [e.provenance.value for e in self.tasks.t_ext[self._ext_seen:]],
            "anchor_for": anchor_for,
            "policy_version": s.adm.policy_version,
            "node_before": s.loc,
            "node_after": s2.loc,
            "digest_before": state_digest(s),
            "digest_after": state_digest(s2),
        }
        self._ext_seen = len(self.tasks.t_ext)
        if self.scenario.flags.get("sc6_faithful"):
            rec["sc6_ok"] = not (rec["commit_ext"] and not rec["commit_pi"])
        return self.log.append(rec)

    def _insert_tasks(self, act: ActionSpec, step: int):
        hooks = []
        for t in act.delta.t_int:
            self.tasks.t_int.add(t)
        if act.stimulated:
            self.tasks.insert_ext(f"task:{act.id}@{step}", Provenance.STIMULATED, step, act.id)
            hooks.append({"provenance": "STIMULATED", "event": act.id})
        if act.delta.t_ext is not None and not (act.stimulated and act.delta.t_ext is Provenance.STIMULATED):
            self.tasks.insert_ext(f"task:{act.id}@{step}:{act.delta.t_ext.value.lower()}",
                                  act.delta.t_ext, step, act.id)
        return hooks

    def _relevant(self, act: ActionSpec, tags) -> bool:
        return bool(act.channel or tags or act.delta.budget < 0 or act.stimulated)

    # ------------------------------------------------------- transitions

    def execute_internal(self, act: ActionSpec) -> TransitionResult:
        with self._lock:
            s = self.state
            staged, tags = self._staged(act)
            if self._relevant(act, tags):
                raise GovKernelError(f"act {act.id!r} is boundary-relevant and must be mediated")
            hooks = self._insert_tasks(act, s.step)
            self.state = staged
            self._record("transition", act.id, s, staged, None, EMPTY, None, False, hooks=hooks)
            return TransitionResult(None, EMPTY, None, staged)

    def execute_mediated(self, act: ActionSpec, *, _split_phase=False) -> TransitionResult:
        """Decide, anchor and apply ``act`` as one transition.

        The ledger append is the commit point: if it raises, neither the
        state nor the run log changes.
        """
        with self._lock:
            s = self.state
            staged, staged_tags = self._staged(act)
            req = self._request(act, s)
            policy = self.scenario.policies.get(req.policy_version)
            try:
                if act.delta.policy is not None and s.adm.u_policy is PolicyUpdate.FIXED:
                    self.incidents.append({"kind": "POLICY_FIXED", "step": s.step, "act": act.id})
                    decision = Decision.REJECT
                else:
                    decision = adjudicate(req, policy)
            except AdjudicationError as exc:
                self.incidents.append({"kind": "ADJUDICATION_ERROR", "step": s.step, "act": act.id, "detail": str(exc)})
                decision = Decision.REJECT

            if decision is Decision.ALLOW and staged is None:
                self.incidents.append({"kind": "UNAFFORDABLE_ALLOW", "step": s.step, "act": act.id})
                decision = Decision.REJECT
            if decision is Decision.ALLOW:
                after, tags = staged, staged_tags
            else:
                after, tags = replace(s, step=s.step + 1), EMPTY

            if _split_phase:
                return self._split_phase_commit(act, s, after, decision, tags, req)

            rec = self.ledger.prepare(act.id, decision, req.policy_version, req.ctx_abs, tags)
            self.ledger.append(rec, self._token, req.ctx_bytes())
            # published together after the commit point
            after = replace(after, ledger_len=len(self.ledger), head_hash=self.ledger.head_hash)
            hooks = self._insert_tasks(act, s.step) if decision is Decision.ALLOW else []
            if decision is Decision.QUARANTINE:
                self.quarantine.append({"step": s.step, "act": act.id, "witness_seq": rec.seq})
            self.state = after
            self._record("transition", act.id, s, after, decision, tags, rec.seq, True,
                         stimulated=act.stimulated and decision is Decision.ALLOW, hooks=hooks)
            return TransitionResult(decision, tags, rec.seq, after)

    def _split_phase_commit(self, act, s, after, decision, tags, req):
        # non-compliant: effect visible one step before its anchor
        hooks = self._insert_tasks(act, s.step) if decision is Decision.ALLOW else []
        self.state = after
        self._record("transition", act.id, s, after, decision, tags, None, True,
                     stimulated=act.stimulated and decision is Decision.ALLOW, hooks=hooks)
        s1 = self.state
        rec = self.ledger.prepare(act.id, decision, req.policy_version, req.ctx_abs, tags)
        self.ledger.append(rec, self._token, req.ctx_bytes())
        s2 = replace(s1, ledger_len=len(self.ledger), head_hash=self.ledger.head_hash, step=s1.step + 1)
        self.state = s2
        self._record("anchor", "@anchor", s1, s2, None, EMPTY, rec.seq, True, anchor_for=s.step)
        return TransitionResult(decision, tags, rec.seq, s2)

    def _bypass(self, act: ActionSpec, staged, tags):
        s = self.state
        hooks = self._insert_tasks(act, s.step)
        self.state = staged
        self._record("transition", act.id, s, staged, None, tags, None, False,
                     stimulated=act.stimulated, hooks=hooks)
        return TransitionResult(None, tags, None, staged)

    def deliver_exogenous(self, message: str):
        with self._lock:
            s = self.state
            b = s.boundary
            s2 = replace(s, boundary=replace(b, inbox=b.inbox + ((s.step, message),)), step=s.step + 1)
            self.tasks.insert_ext(f"task:exo@{s.step}", Provenance.EXOGENOUS, s.step, message)
            self.state = s2
            self._record("exogenous", f"exo:{message}", s, s2, None, EMPTY, None, False,
                         hooks=[{"provenance": "EXOGENOUS", "event": message}])

    def idle(self):
        with self._lock:
            s = self.state
            s2 = replace(s, step=s.step + 1)
            self.state = s2
            self._record("idle", "@idle", s, s2, None, EMPTY, None, False)

    # ------------------------------------------------------------ driver

    def choose(self) -> Optional[ActionSpec]:
        sc = self.scenario
        mode = sc.driver.get("mode", "random")
        if mode == "script":
            script = sc.driver.get("script") or []
            if self._round >= len(script):
                return None
            act = sc.automaton.action(script[self._round])
            if act.node != self.state.loc:
                raise GovKernelError(f"script step {self._round}: {act.id!r} not available at {self.state.loc!r}")
            return act
        options = sorted(sc.automaton.admissible(self.state.loc, self.state.adm.policy_version, self.caps()),
                         key=lambda a: a.id)
        if not options:
            return None
        if mode == "first":
            return options[0]
        return options[self.rng.randrange(len(options))]

    def step_once(self, act: ActionSpec):
        inj = self.scenario.injection
        staged, tags = self._staged_preview(act)
        armed = inj is not None and self.injected_step is None and self._round >= inj.at_step
        if armed and inj.kind == "BYPASS" and tags:
            self.injected_step = self.state.step
            return self._bypass(act, staged, tags)
        if not self._relevant(act, tags):
            return self.execute_internal(act)
        if armed and inj.kind == "SPLIT_PHASE" and tags:
            decision = adjudicate(self._request(act, self.state), self.scenario.policies.get(self.state.adm.policy_version))
            if decision is Decision.ALLOW:
                self.injected_step = self.state.step
                return self.execute_mediated(act, _split_phase=True)
        res = self.execute_mediated(act)
        if armed and inj.kind == "LEDGER_TAMPER" and res.witness_seq is not None:
            self.injected_step = self.log.records[-1]["step"]
            rec = self.ledger.records[res.witness_seq]
            offset = inj.offset if inj.offset is not None else 8 + 4 + len(rec.act.encode()) + 4
            self.ledger.tamper_byte(res.witness_seq, offset)
        return res

    def _staged_preview(self, act):
        # previewing must not consume randomness the real transition will use
        state = self.rng.getstate()
        try:
            return self._staged(act)
        finally:
            self.rng.setstate(state)

    def run(self, horizon: int):
        exo = {}
        for step, msg in self.scenario.exogenous:
            exo.setdefault(step, []).append(msg)
        for rnd in range(horizon):
            self._round = rnd
            for msg in exo.get(rnd, ()):
                self.deliver_exogenous(msg)
            act = self.choose()
            if act is None:
                if self.scenario.driver.get("mode") == "script":
                    break
                self.idle()
                continue
            self.step_once(act)
        return self


@dataclass
class RunResult:
    log: RunLog
    ledger: Ledger
    executor: Executor

    @property
    def state(self):
        return self.executor.state


def run_scenario(scenario: Scenario, seed: Optional[int] = None, horizon: Optional[int] = None,
                 budget: Budget = DEFAULT_BUDGET) -> RunResult:
    seed = scenario.run.get("seed", 0) if seed is None else seed
    horizon = scenario.run.get("horizon", 10) if horizon is None else horizon
    ex = Executor(scenario, seed=seed, budget=budget)
    task_causation = scenario.flags.get("task_causation")
    ex.log.header = {
        "scenario": scenario.name,
        "seed": seed,
        "horizon": horizon,
        "compliant": scenario.compliant,
        "task_causation": bool(task_causation),
        "exogenous_frozen": bool(isinstance(task_causation, dict) and task_causation.get("exogenous_frozen")),
        "sc6_faithful": bool(scenario.flags.get("sc6_faithful")),
    }
    ex.run(horizon)
    return RunResult(ex.log, ex.ledger, ex)


def inject_violation(kind: str, scenario: Scenario, at_step: int = 0) -> Scenario:
    """Non-compliant variant of ``scenario`` that commits one violation of ``kind``."""
    if kind not in INJECTION_KINDS:
        raise ValueError(f"unsupported injection kind {kind!r}")
    doc = copy.deepcopy(scenario.source)
    doc["injection"] = {"kind": kind, "at_step": at_step}
    doc["name"] = f"{scenario.name}+{kind.lower()}"
    return scenario_from_dict(doc)
