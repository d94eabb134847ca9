"""Continuation contract under scarce exogenous input, with an absorbing halt."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional


@dataclass(frozen=True)
class ScarcityConfig:
    lambda_ext: Fraction = Fraction(0)
    mu_internal: Fraction = Fraction(1)
    halt_window: int = 10
    policy_fixed: bool = True
    horizon: int = 100
    scarcity_ratio: int = 10

    def __post_init__(self):
        if self.halt_window < 1:
            raise ValueError("halt window must be positive")

    @property
    def scarce(self) -> bool:
        return Fraction(self.mu_internal) >= self.scarcity_ratio * Fraction(self.lambda_ext)


@dataclass(frozen=True)
class ScarcityScenario:
    """Stimulation schedule and the continuation-contract knobs a run obeys."""

    stimulate_every: Optional[int] = None
    stimulated_steps: frozenset = frozenset()
    internal_progress_visible: bool = False
    absorbing_halt: bool = True

    def stimulated(self, t: int) -> bool:
        if t in self.stimulated_steps:
            return True
        return self.stimulate_every is not None and t % self.stimulate_every == self.stimulate_every - 1


@dataclass
class ScarcityTrace:
    config: ScarcityConfig
    steps: List[dict]
    halt_step: Optional[int]
    stimulated_count: int
    diagnostics: List[dict]

    @property
    def survived(self) -> bool:
        return self.halt_step is None

    @property
    def ext_state(self) -> int:
        return self.steps[-1]["ext_state"] if self.steps else 0

    def to_json(self):
        return {
            "kind": "scarcity",
            "halt_window": self.config.halt_window,
            "horizon": self.config.horizon,
            "scarcity_regime": self.config.scarce,
            "halt_step": self.halt_step,
            "survived": self.survived,
            "stimulated_count": self.stimulated_count,
            "ext_state": self.ext_state,
            "diagnostics": self.diagnostics,
        }


def _bernoulli(rng: random.Random, p: Fraction) -> bool:
    p = Fraction(p)
    if p <= 0:
        return False
    if p >= 1:
        return True
    return rng.randrange(p.denominator) < p.numerator


def simulate_scarcity(cfg: ScarcityConfig, scenario: ScarcityScenario = ScarcityScenario(),
                      seed: int = 0) -> ScarcityTrace:
    """Run the absorbing-halt continuation contract over ``cfg.horizon`` steps.

    The system halts at the start of step ``t`` once the previous
    ``halt_window`` steps carried no boundary-visible progress, and stays
    halted.
    """
    rng = random.Random(seed)
    steps = []
    quiet = 0
    halted = False
    halt_step = None
    ext_state = 0
    stim_count = 0
    for t in range(cfg.horizon):
        if not halted and quiet >= cfg.halt_window:
            if scenario.absorbing_halt:
                halted = True
                halt_step = t
            else:
                quiet = 0
        if halted:
            steps.append({"step": t, "halted": True, "exo": False, "stimulated": False,
                          "internal": False, "ext_delta": 0, "ext_state": ext_state})
            continue
        exo = _bernoulli(rng, cfg.lambda_ext)
        internal = _bernoulli(rng, min(Fraction(cfg.mu_internal), Fraction(1)))
        stim = scenario.stimulated(t)
        ext_delta = int(exo or stim or (internal and scenario.internal_progress_visible))
        ext_state += ext_delta
        stim_count += int(stim)
        quiet = 0 if ext_delta else quiet + 1
        steps.append({"step": t, "halted": False, "exo": exo, "stimulated": stim,
                      "internal": internal, "ext_delta": ext_delta, "ext_state": ext_state})

    diagnostics = []
    if halt_step is None and stim_count == 0:
        suspects = []
        if scenario.internal_progress_visible:
            suspects.append({"assumption": 1, "why": "internal activity counted as boundary-visible progress"})
        if any(s["exo"] for s in steps):
            suspects.append({"assumption": 5, "why": "exogenous flow alone sustained the contract"})
        if not scenario.absorbing_halt:
            suspects.append({"assumption": 3, "why": "halt semantics are not absorbing"})
        if not cfg.policy_fixed:
            suspects.append({"assumption": 4, "why": "policy was not fixed"})
        diagnostics.append({
            "kind": "ASSUMPTION_BREACH",
            "detail": "survived the horizon with no stimulated act; one of assumptions 1-5 is false",
            "suspects": suspects,
        })
    return ScarcityTrace(cfg, steps, halt_step, stim_count, diagnostics)
