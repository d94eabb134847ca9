"""Membrane decision function: first-match rule evaluation over a request context."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import AdjudicationError
from .scenario import Policy, match_channel
from .state import Decision, canonical_json

INTERNAL_CHANNEL = "internal"


@dataclass(frozen=True)
class MediationRequest:
    act: str
    channel: str
    parent: str
    risk_class: str
    payload: str = ""
    caps_snapshot: Tuple[str, ...] = ()
    budget_snapshot: int = 0
    cost: int = 0
    policy_version: str = ""

    def context(self) -> dict:
        # act id is deliberately excluded: equal contexts must adjudicate equally
        return {
            "budget": self.budget_snapshot,
            "caps": sorted(self.caps_snapshot),
            "channel": self.channel,
            "cost": self.cost,
            "parent": self.parent,
            "payload": self.payload,
            "policy_version": self.policy_version,
            "risk_class": self.risk_class,
        }

    def ctx_bytes(self) -> bytes:
        return canonical_json(self.context())

    @property
    def ctx_abs(self) -> str:
        return hashlib.sha256(self.ctx_bytes()).hexdigest()

    @classmethod
    def from_context(cls, ctx_bytes: bytes, act: str = "") -> "MediationRequest":
        c = json.loads(ctx_bytes)
        return cls(
            act=act,
            channel=c["channel"],
            parent=c["parent"],
            risk_class=c["risk_class"],
            payload=c["payload"],
            caps_snapshot=tuple(c["caps"]),
            budget_snapshot=c["budget"],
            cost=c["cost"],
            policy_version=c["policy_version"],
        )


def adjudicate(req: MediationRequest, policy: Optional[Policy]) -> Decision:
    if policy is None:
        raise AdjudicationError(f"policy version {req.policy_version!r} is not registered")
    if req.cost > req.budget_snapshot:
        return Decision.REJECT
    order = policy.risk_order
    for rule in policy.rules:
        if not match_channel(rule.channel, req.channel, req.parent):
            continue
        if any(c not in req.caps_snapshot for c in rule.requires):
            continue
        if req.budget_snapshot < rule.budget_floor:
            continue
        if rule.max_risk is None or order.index(req.risk_class) <= order.index(rule.max_risk):
            return rule.decision
        if rule.over_risk is not None:
            return rule.over_risk
    return policy.default
