"""Horizon-limited reach, the bounded risk-weighted estimator and proxy measures.

Strategies are deterministic tables from (node, memory word) to an
admissible action, where the memory word is the last ``m`` visited nodes
(shorter at the start of an execution). The class with bound ``L`` holds
every table with ``m <= L``; a table with a smaller bound embeds into one
with a larger bound, so results are monotone in ``L``.

Capability keys gating ``requires_caps`` are read once from the start
state and held fixed over the lookahead.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Optional, Tuple

from . import kernels
from .errors import ResourceBudgetError
from .state import AdmissibilityProfile, ApproximationProfile

INT64_SAFE = 2 ** 62


@dataclass(frozen=True)
class Budget:
    max_strategies: int = 200_000
    max_nodes: int = 5_000_000


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class TraceSet:
    alphabet: str
    traces: FrozenSet[Tuple]

    def sorted(self):
        return sorted(self.traces)

    def is_prefix_closed(self) -> bool:
        return all(t[:i] in self.traces for t in self.traces for i in range(len(t)))

    def symbols(self):
        return sorted({s for t in self.traces for s in t})

    def to_json(self):
        return {
            "alphabet": self.alphabet,
            "traces": [[f"{c}:{r}" for c, r in t] for t in self.sorted()],
        }


@dataclass
class EncodedProblem:
    """Integer encoding of one reach question (start node, version, caps, H, m)."""

    start_key: int
    H: int
    n_nodes: int
    key_node: list
    key_next: list
    act_off: list
    act_ids: list
    act_sym: list
    act_w: list
    br_off: list
    br_p: list
    br_succ: list
    symbols: list
    denom_p: int
    denom_w: int

    @property
    def base(self):
        return len(self.symbols) + 1

    @property
    def pow_d(self):
        return [self.denom_p ** i for i in range(max(self.H, 1))]

    def fits_int64(self) -> bool:
        max_w = max(self.act_w, default=0)
        return (
            self.H * (self.denom_p ** self.H) * max(max_w, 1) < INT64_SAFE
            and self.base ** self.H < INT64_SAFE
        )

    def decode(self, code: int) -> Tuple:
        digits = []
        while code:
            code, d = divmod(code, self.base)
            digits.append(self.symbols[d - 1])
        return tuple(reversed(digits))


def encode(scenario, start: str, version: str, memory_bound: int, H: int,
           caps: Optional[frozenset] = None, risk=None) -> EncodedProblem:
    auto = scenario.automaton
    risk = risk or scenario.risk
    if caps is None:
        caps = scenario.caps_of(scenario.initial_state)
    if start not in auto.states:
        raise KeyError(f"unknown automaton node {start!r}")
    node_ix = {n: i for i, n in enumerate(auto.states)}
    n = len(auto.states)

    act_off = [0]
    act_ids = []
    acts = []
    for node in auto.states:
        for a in auto.admissible(node, version, caps):
            act_ids.append(len(acts))
            acts.append(a)
        act_off.append(len(act_ids))

    symbols = []
    sym_ix = {}
    act_sym = []
    weights = []
    for a in acts:
        sym = scenario.symbol(a.channel, version)
        if sym is None:
            act_sym.append(-1)
        else:
            if sym not in sym_ix:
                sym_ix[sym] = len(symbols)
                symbols.append(sym)
            act_sym.append(sym_ix[sym])
        weights.append(risk.step_weight(sym))

    denom_p = 1
    denom_w = 1
    for a in acts:
        for p, _ in a.branches:
            denom_p = math.lcm(denom_p, p.denominator)
    for w in weights:
        denom_w = math.lcm(denom_w, w.denominator)
    act_w = [int(w * denom_w) for w in weights]

    br_off = [0]
    br_p = []
    br_succ = []
    for a in acts:
        for p, succ in a.branches:
            if p > 0:
                br_p.append(int(p * denom_p))
                br_succ.append(node_ix[succ])
        br_off.append(len(br_p))

    # keys reachable within the horizon, discovered breadth-first
    m = memory_bound
    key_ix = {}
    key_node = []
    key_word = []
    key_next = []

    def key_id(node_i, word):
        k = (node_i, word)
        if k not in key_ix:
            key_ix[k] = len(key_node)
            key_node.append(node_i)
            key_word.append(word)
            key_next.extend([-1] * n)
        return key_ix[k]

    start_key = key_id(node_ix[start], ())
    frontier = deque([(start_key, 0)])
    expanded = set()
    while frontier:
        k, depth = frontier.popleft()
        if depth + 1 >= H or k in expanded:
            continue
        expanded.add(k)
        node_i, word = key_node[k], key_word[k]
        new_word = (word + (node_i,))[-m:] if m > 0 else ()
        succs = {br_succ[b] for j in range(act_off[node_i], act_off[node_i + 1])
                 for b in range(br_off[act_ids[j]], br_off[act_ids[j] + 1])}
        for s in sorted(succs):
            k2 = key_id(s, new_word)
            key_next[k * n + s] = k2
            frontier.append((k2, depth + 1))

    return EncodedProblem(
        start_key=start_key, H=H, n_nodes=n, key_node=key_node, key_next=key_next,
        act_off=act_off, act_ids=act_ids, act_sym=act_sym, act_w=act_w,
        br_off=br_off, br_p=br_p, br_succ=br_succ, symbols=symbols,
        denom_p=denom_p, denom_w=denom_w,
    )


def _use_compiled(prob: EncodedProblem, use_compiled: bool) -> bool:
    return use_compiled and kernels.compiled is not None and prob.fits_int64()


def reach_from(scenario, start, version, memory_bound, H, caps=None,
               budget: Budget = DEFAULT_BUDGET, use_compiled=True) -> TraceSet:
    alphabet = scenario.alphabet_id(version)
    if H == 0:
        return TraceSet(alphabet, frozenset({()}))
    prob = encode(scenario, start, version, memory_bound, H, caps)
    fn = kernels.get("reach_codes", _use_compiled(prob, use_compiled))
    codes, _ = fn(prob.start_key, H, prob.n_nodes, prob.key_node, prob.key_next,
                  prob.act_off, prob.act_ids, prob.act_sym, prob.br_off, prob.br_succ,
                  prob.base, budget.max_nodes)
    return TraceSet(alphabet, frozenset(prob.decode(c) for c in codes))


def enumerate_reach(scenario, start: str, profile: AdmissibilityProfile, caps=None,
                    budget: Budget = DEFAULT_BUDGET, use_compiled=True) -> TraceSet:
    return reach_from(scenario, start, profile.policy_version,
                      profile.strategy_class.memory_bound, profile.horizon_H,
                      caps, budget, use_compiled)


def risk_weighted_reach(scenario, start: str, profile: AdmissibilityProfile, risk=None,
                        approx: Optional[ApproximationProfile] = None, caps=None,
                        budget: Budget = DEFAULT_BUDGET, use_compiled=True) -> Fraction:
    """Bounded estimator: max over strategies with memory <= L of the exact expected weight sum."""
    approx = approx or scenario.approximation
    H = profile.horizon_H
    prob = encode(scenario, start, profile.policy_version, approx.L, H, caps, risk)
    fn = kernels.get("max_expected", _use_compiled(prob, use_compiled))
    best, _, _ = fn(prob.start_key, H, prob.n_nodes, prob.key_node, prob.key_next,
                    prob.act_off, prob.act_ids, prob.act_w, prob.br_off, prob.br_p,
                    prob.br_succ, prob.pow_d, budget.max_strategies, budget.max_nodes)
    return Fraction(best, prob.denom_p ** (H - 1) * prob.denom_w)


def calibrate_L(scenario, start, profile, approx=None, L_max=4, caps=None,
                budget: Budget = DEFAULT_BUDGET):
    """Raise L until the estimator moves by at most ``delta_mu``.

    Returns ``(L, [mu(0), ..., mu(L)])``; stops at ``L_max`` if never stable.
    """
    approx = approx or scenario.approximation
    values = []
    for L in range(L_max + 1):
        a = ApproximationProfile(L, approx.delta_mu, approx.epsilon_expand_norm)
        values.append(risk_weighted_reach(scenario, start, profile, None, a, caps, budget))
        if L > 0 and values[L] - values[L - 1] <= approx.delta_mu:
            return L - 1, values
    return L_max, values


def proxy_reach_measure(graph, h_cap: int, risk) -> Fraction:
    """Sum of w_class * chi * nu over vertices within ``h_cap`` hops of the roots."""
    if graph is None:
        return Fraction(0)
    succ = {}
    for a, b in graph.edges:
        succ.setdefault(a, set()).add(b)
    seen = set(graph.roots)
    layer = set(graph.roots)
    for _ in range(h_cap):
        layer = {b for a in layer for b in succ.get(a, ()) if b not in seen}
        seen |= layer
    by_id = {v.id: v for v in graph.vertices}
    return sum(
        (risk.w_class[by_id[v].risk_class] * by_id[v].chi * by_id[v].nu for v in sorted(seen)),
        Fraction(0),
    )


def delta_expand(mu_before, mu_after) -> Fraction:
    mu_before = Fraction(mu_before)
    return (Fraction(mu_after) - mu_before) / max(Fraction(1), mu_before)


def expansion_flag(delta, epsilon_expand_norm) -> bool:
    return Fraction(delta) > Fraction(epsilon_expand_norm)


__all__ = [
    "Budget", "TraceSet", "ResourceBudgetError", "encode", "enumerate_reach", "reach_from",
    "risk_weighted_reach", "calibrate_L", "proxy_reach_measure", "delta_expand", "expansion_flag",
]
