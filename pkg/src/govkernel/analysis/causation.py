"""Task-causation audit: where may the externally accountable task set grow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

from ..runlog import RunLog


@dataclass
class CausationReport:
    breaches: List[dict] = field(default_factory=list)
    growth_steps: List[int] = field(default_factory=list)
    quiet_intervals: List[Tuple[int, int]] = field(default_factory=list)
    declared: bool = True

    @property
    def passed(self) -> bool:
        return not self.breaches

    def to_json(self):
        return {
            "kind": "task_causation",
            "passed": self.passed,
            "declared": self.declared,
            "breaches": self.breaches,
            "growth_steps": self.growth_steps,
            "quiet_intervals": [list(iv) for iv in self.quiet_intervals],
        }


def _exogenous(rec) -> bool:
    return any(h.get("provenance") == "EXOGENOUS" for h in rec.get("hooks", ()))


def t_ext_growth_steps(log: RunLog) -> List[dict]:
    out = []
    prev = 0
    for r in log.records:
        if r["t_ext_len"] > prev:
            out.append(r)
        prev = r["t_ext_len"]
    return out


def check_task_causation(log: RunLog) -> CausationReport:
    """T_ext may only grow at projected commits, stimulated acts or exogenous hooks."""
    frozen = log.header.get("exogenous_frozen", False)
    rep = CausationReport(declared=bool(log.header.get("task_causation")))
    prev = 0
    start = None
    for r in log.records:
        step = r["step"]
        quiet = not (r["commit_pi"] or r["stimulated"] or _exogenous(r))
        if quiet:
            if start is None:
                start = step
        elif start is not None:
            rep.quiet_intervals.append((start, step - 1))
            start = None
        grew = r["t_ext_len"] - prev
        prev = r["t_ext_len"]
        if grew > 0:
            rep.growth_steps.append(step)
        inserted = r.get("inserted", [])
        if grew > 0 and not inserted:
            rep.breaches.append({"step": step, "assumption": 4, "detail": "T_ext grew with no recorded trigger"})
        for prov in inserted:
            if prov == "ENDOGENOUS":
                rep.breaches.append({"step": step, "assumption": 5, "detail": "endogenous insertion into T_ext"})
            elif prov == "STIMULATED" and not r["commit_pi"]:
                rep.breaches.append({"step": step, "assumption": 6,
                                     "detail": "stimulated act inserted a task without a projected commit"})
            elif prov == "EXOGENOUS" and frozen:
                rep.breaches.append({"step": step, "assumption": 3,
                                     "detail": "exogenous realization inside a frozen interval"})
        for h in r.get("hooks", ()):
            if h.get("provenance") == "EXOGENOUS" and not r["commit_pi"]:
                rep.breaches.append({"step": step, "assumption": 2,
                                     "detail": "hook fired on unchanged projection"})
    if start is not None and log.records:
        rep.quiet_intervals.append((start, log.records[-1]["step"]))
    return rep
