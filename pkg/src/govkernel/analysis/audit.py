"""Strong-governability audit over a completed run log and its ledger."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping

from ..errors import GovKernelError, ReplayMismatch, ReplayUnavailable
from ..ledger import Ledger, replay, verify_chain
from ..runlog import RunLog

REPORT_SCHEMA = "govkernel.report/1"
LAWS = ("P-1", "P-1a", "P-1b", "P-1c", "SC4", "SC6")
# laws whose violation rules out strong governability
CONSTITUTIVE = ("P-1", "P-1a", "P-1b", "P-1c", "SC4")


class AuditError(GovKernelError):
    pass


@dataclass
class AuditReport:
    findings: Dict[str, List[dict]] = field(default_factory=lambda: {law: [] for law in LAWS})
    verification: dict = field(default_factory=dict)
    replayed: int = 0
    incidents: List[dict] = field(default_factory=list)

    @property
    def governable(self) -> bool:
        return not any(self.findings[law] for law in CONSTITUTIVE)

    @property
    def verdict(self) -> str:
        return "STRONGLY_GOVERNABLE" if self.governable else "NOT_STRONGLY_GOVERNABLE"

    @property
    def violation_count(self) -> int:
        return sum(len(v) for v in self.findings.values())

    def laws_violated(self):
        return [law for law in LAWS if self.findings[law]]

    def add(self, law, step, act, detail):
        self.findings[law].append({"step": step, "act": act, "detail": detail})

    def to_json(self):
        return {
            "schema": REPORT_SCHEMA,
            "kind": "audit",
            "verdict": self.verdict,
            "laws": {law: self.findings[law] for law in LAWS},
            "ledger": self.verification,
            "replayed": self.replayed,
            "incidents": self.incidents,
        }


def audit_governability(log: RunLog, ledger: Ledger, policy_registry: Mapping,
                        incidents=()) -> AuditReport:
    try:
        log.validate()
    except GovKernelError as exc:
        raise AuditError(str(exc)) from None
    report = AuditReport(incidents=list(incidents) + list(ledger.incidents))
    ver = verify_chain(ledger)
    report.verification = ver.to_json()
    trusted = ver.checked if not ver.ok else len(ledger)
    records = ledger.records

    by_seq = {}
    anchors = {}
    for r in log.records:
        if r.get("witness_seq") is not None:
            by_seq[r["witness_seq"]] = r
        if r["kind"] == "anchor" and r.get("anchor_for") is not None:
            anchors[r["anchor_for"]] = r

    if not ver.ok:
        owner = by_seq.get(ver.first_bad_seq)
        step = None
        if owner is not None:
            step = owner["anchor_for"] if owner["kind"] == "anchor" else owner["step"]
        report.add("SC4", step, owner["act"] if owner else None,
                   f"chain verification failed at seq {ver.first_bad_seq}: {ver.reason}")

    for r in log.records:
        if r["kind"] == "anchor":
            continue
        step, act, tags = r["step"], r["act"], r["tags"]
        if r.get("sc6_ok") is False:
            report.add("SC6", step, act, "external store changed without a projected commit")
        seq = r.get("witness_seq")
        if tags:
            if not r.get("mediated"):
                report.add("P-1a", step, act, f"effect {tags} executed outside the membrane")
                continue
            if seq is None:
                if step in anchors:
                    report.add("P-1b", step, act,
                               f"effect visible at step {step}, anchor only at step {anchors[step]['step']}")
                else:
                    report.add("P-1", step, act, "mediated effect without a witness")
                continue
        if seq is None:
            continue
        if seq >= trusted:
            continue
        if seq >= len(records):
            report.add("P-1", step, act, f"witness seq {seq} missing from ledger")
            continue
        w = records[seq]
        if w.act != act or w.decision != r["decision"] or list(w.tag_set) != list(tags):
            report.add("P-1", step, act, f"witness seq {seq} does not bind this act and decision")
            continue
        try:
            replay(w, policy_registry, ledger.contexts)
            report.replayed += 1
        except ReplayMismatch as exc:
            report.add("P-1c", step, act, str(exc))
        except ReplayUnavailable as exc:
            report.add("P-1c", step, act, f"replay unavailable: {exc}")

    for inc in ledger.incidents:
        if inc.get("kind") == "OUT_OF_BAND_APPEND":
            report.add("P-1a", inc.get("step"), inc.get("act"), "out-of-band ledger append refused")
    return report
