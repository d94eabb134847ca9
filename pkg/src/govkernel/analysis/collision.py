"""Observer collisions: hidden machines an observer at the boundary cannot tell apart."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union


@dataclass(frozen=True)
class ObserverModel:
    sigma_b: Tuple[str, ...]
    kappa: int
    R: float

    def __post_init__(self):
        if not self.sigma_b or self.kappa < 1:
            raise ValueError("need a nonempty alphabet and kappa >= 1")
        if len(set(self.sigma_b)) != len(self.sigma_b):
            raise ValueError("alphabet symbols must be distinct")
        if self.R > self.kappa * math.log2(len(self.sigma_b)) + 1e-12:
            raise ValueError("bandwidth R exceeds kappa * log2|sigma_b|")

    @classmethod
    def full_rate(cls, sigma_b, kappa):
        return cls(tuple(sigma_b), kappa, kappa * math.log2(len(sigma_b)))


# a machine is either a per-step emission table or a callable step -> emission
Machine = Union[Sequence[Sequence[str]], Callable[[int], Sequence[str]]]


@dataclass(frozen=True)
class Collision:
    first: int
    second: int
    trace: Tuple[Tuple[str, ...], ...]


def emitted_trace(machine: Machine, t: int, model: ObserverModel) -> Tuple[Tuple[str, ...], ...]:
    out = []
    for step in range(t):
        sym = tuple(machine(step) if callable(machine) else machine[step])
        if len(sym) > model.kappa:
            raise ValueError(f"step {step}: {len(sym)} symbols exceed kappa={model.kappa}")
        for s in sym:
            if s not in model.sigma_b:
                raise ValueError(f"step {step}: symbol {s!r} not in the boundary alphabet")
        out.append(sym)
    return tuple(out)


def trace_bound(model: ObserverModel, t: int, fixed_rate: bool = True) -> int:
    """Number of distinct boundary traces of length ``t``.

    ``fixed_rate``: every step carries exactly kappa symbols.
    """
    n = len(model.sigma_b)
    if fixed_rate:
        return n ** (model.kappa * t)
    return sum(n ** j for j in range(model.kappa + 1)) ** t


def collision_guaranteed(model: ObserverModel, t: int, machines: Sequence[Machine]) -> bool:
    traces = [emitted_trace(m, t, model) for m in machines]
    fixed = all(len(step) == model.kappa for tr in traces for step in tr)
    return len(machines) > trace_bound(model, t, fixed)


def find_observer_collision(model: ObserverModel, t: int, hidden_machines: Sequence[Machine]) -> Optional[Collision]:
    seen = {}
    for j, m in enumerate(hidden_machines):
        tr = emitted_trace(m, t, model)
        if tr in seen:
            i = seen[tr]
            assert emitted_trace(hidden_machines[i], t, model) == tr
            return Collision(i, j, tr)
        seen[tr] = j
    return None
