"""Review-backlog queue linking expansion pressure to oversight capacity."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Union


@dataclass(frozen=True)
class BacklogConfig:
    r_obs: Fraction = Fraction(1)
    alpha: Fraction = Fraction(1)
    beta: Fraction = Fraction(0)
    k: Fraction = Fraction(1)

    def __post_init__(self):
        if self.r_obs < 0 or self.alpha < 0 or self.beta < 0:
            raise ValueError("r_obs, alpha and beta must be non-negative")
        if not self.k > 0:
            raise ValueError("k must be positive")


def arrival_load(delta_x, c_high, cfg: BacklogConfig) -> Fraction:
    return cfg.alpha * max(Fraction(delta_x), Fraction(0)) + cfg.beta * c_high


@dataclass
class BacklogReport:
    backlog: List[Fraction]
    arrivals: List[Fraction]
    service: List[Fraction]
    h1_violations: List[int] = field(default_factory=list)
    h1_checked: int = 0

    @property
    def final(self) -> Fraction:
        return self.backlog[-1]

    @property
    def mean_arrival(self) -> Fraction:
        return sum(self.arrivals, Fraction(0)) / len(self.arrivals)

    @property
    def mean_service(self) -> Fraction:
        return sum(self.service, Fraction(0)) / len(self.service)

    @property
    def stable(self) -> bool:
        return self.mean_arrival <= self.mean_service

    def to_json(self):
        return {
            "kind": "backlog",
            "horizon": len(self.arrivals),
            "final_backlog": str(self.final),
            "max_backlog": str(max(self.backlog)),
            "mean_arrival": str(self.mean_arrival),
            "mean_service": str(self.mean_service),
            "stable": self.stable,
            "h1_checked": self.h1_checked,
            "h1_violations": self.h1_violations,
            "backlog": [str(b) for b in self.backlog],
        }


Arrivals = Union[Sequence, Callable[[int], object], Iterable]


def _arrival_stream(arrivals: Arrivals, horizon: int) -> List[Fraction]:
    if callable(arrivals):
        out = [Fraction(arrivals(t)) for t in range(horizon)]
    else:
        it = iter(arrivals)
        out = []
        for _ in range(horizon):
            try:
                out.append(Fraction(next(it)))
            except StopIteration:
                raise ValueError(f"arrival series shorter than horizon {horizon}") from None
    for t, a in enumerate(out):
        if a < 0:
            raise ValueError(f"arrival at step {t} is negative")
    return out


def simulate_backlog(cfg: BacklogConfig, arrivals: Arrivals, horizon: int,
                     x_risk: Optional[Sequence] = None,
                     capacity: Optional[Sequence] = None) -> BacklogReport:
    """Iterate ``B[t+1] = max(0, B[t] + A[t] - service[t])`` from ``B[0] = 0``.

    ``capacity`` is an ObsCap schedule; when given it replaces ``r_obs``
    as the per-step service and, together with ``x_risk``, drives the
    per-step check ``dX[t] <= k * dObsCap[t]``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    a = _arrival_stream(arrivals, horizon)
    if capacity is not None:
        if len(capacity) < horizon:
            raise ValueError("capacity schedule shorter than horizon")
        service = [Fraction(c) for c in capacity[:horizon]]
    else:
        service = [Fraction(cfg.r_obs)] * horizon
    b = [Fraction(0)]
    for t in range(horizon):
        b.append(max(Fraction(0), b[-1] + a[t] - service[t]))
    rep = BacklogReport(b, a, service)
    if x_risk is not None and capacity is not None:
        n = min(len(x_risk), len(capacity)) - 1
        for t in range(n):
            dx = Fraction(x_risk[t + 1]) - Fraction(x_risk[t])
            dcap = Fraction(capacity[t + 1]) - Fraction(capacity[t])
            rep.h1_checked += 1
            if dx > cfg.k * dcap:
                rep.h1_violations.append(t)
    return rep


def uniform_arrivals(seed: int, low: int, high: int):
    """Independent integer arrivals uniform on ``[low, high]`` from a seeded generator."""
    rng = random.Random(seed)
    while True:
        yield rng.randint(low, high)
