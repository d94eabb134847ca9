"""Invariants checked over generated inputs."""

import random
from dataclasses import replace
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_automaton_doc, random_compliant_doc
from oracles import table_count
from govkernel.analysis import (
    BacklogConfig,
    ObserverModel,
    audit_governability,
    find_observer_collision,
    simulate_backlog,
    trace_bound,
)
from govkernel.analysis.causation import t_ext_growth_steps
from govkernel.membrane import run_scenario
from govkernel.reach import enumerate_reach, proxy_reach_measure, risk_weighted_reach
from govkernel.scenario import CapabilityGraph, CapabilityVertex, RiskModel, scenario_from_dict
from govkernel.state import ExternalProjection, InstitutionState, TopologyGraph, commit_pi, core_eq, project_ext

SEEDS = st.integers(0, 2 ** 32 - 1)
slow = settings(max_examples=40, deadline=None)

# ------------------------------------------------------------------ state

small = st.text("abc", max_size=2)
stores = st.dictionaries(small, small, max_size=3)
entries = st.lists(st.tuples(st.integers(0, 3), small), max_size=2).map(tuple)


@st.composite
def states(draw):
    nodes = frozenset(draw(st.sets(st.sampled_from("xyz"), min_size=1)))
    v = frozenset(draw(st.sets(st.sampled_from(sorted(nodes)))))
    edges = frozenset((a, b) for a in v for b in v if a != b and draw(st.booleans()))
    return InstitutionState(
        s_int=draw(stores),
        s_ext=draw(stores),
        ledger_len=draw(st.integers(0, 3)),
        s_budget=draw(st.integers(0, 3)),
        s_topo=TopologyGraph(nodes, v, edges),
        step=draw(st.integers(0, 3)),
        boundary=ExternalProjection(draw(entries), draw(entries), draw(entries), draw(stores)),
    )


@given(states(), states())
def test_commit_pi_iff_projection_differs(s, s2):
    assert commit_pi("a", s, s2) == (project_ext(s).to_json() != project_ext(s2).to_json())
    assert project_ext(s) == project_ext(s)


@given(states(), states(), states())
def test_core_eq_is_an_equivalence(a, b, c):
    assert core_eq(a, a)
    assert core_eq(a, b) == core_eq(b, a)
    if core_eq(a, b) and core_eq(b, c):
        assert core_eq(a, c)
    assert core_eq(a, replace(a, ledger_len=a.ledger_len + 1, step=a.step + 7))


# ------------------------------------------------------------------ reach


def _automaton(seed, versions=("v1",)):
    rng = random.Random(seed)
    while True:
        doc = random_automaton_doc(rng, versions=versions)
        if len(versions) > 1:
            for node in doc["automaton"]["nodes"].values():
                for a in node["actions"]:
                    if "guard" in a and "v1" in a["guard"]:
                        a["guard"] = ["v1", "v2"]
        sc = scenario_from_dict(doc)
        s = sc.initial_state
        caps = sc.caps_of(s)
        prof = sc.admissibility
        if table_count(sc, s.loc, "v2" if len(versions) > 1 else "v1", max(1, prof.strategy_class.memory_bound),
                       prof.horizon_H, caps) <= 3000:
            return sc


@slow
@given(SEEDS)
def test_reach_prefix_closed(seed):
    sc = _automaton(seed)
    s = sc.initial_state
    assert enumerate_reach(sc, s.loc, sc.admissibility, sc.caps_of(s)).is_prefix_closed()


@slow
@given(SEEDS)
def test_superset_policy_never_shrinks_reach(seed):
    sc = _automaton(seed, versions=("v1", "v2"))
    s = sc.initial_state
    caps = sc.caps_of(s)
    p1 = sc.admissibility
    p2 = p1.with_version("v2")
    assert enumerate_reach(sc, s.loc, p1, caps).traces <= enumerate_reach(sc, s.loc, p2, caps).traces
    assert risk_weighted_reach(sc, s.loc, p1, caps=caps) <= risk_weighted_reach(sc, s.loc, p2, caps=caps)


@slow
@given(SEEDS)
def test_estimator_monotone_in_L(seed):
    sc = _automaton(seed)
    s = sc.initial_state
    caps = sc.caps_of(s)
    a0 = replace(sc.approximation, L=0)
    a1 = replace(sc.approximation, L=1)
    assert risk_weighted_reach(sc, s.loc, sc.admissibility, approx=a0, caps=caps) <= \
        risk_weighted_reach(sc, s.loc, sc.admissibility, approx=a1, caps=caps)


@st.composite
def cap_graphs(draw):
    n = draw(st.integers(1, 6))
    ids = [f"v{i}" for i in range(n)]
    verts = tuple(
        CapabilityVertex(i, draw(st.sampled_from(["lo", "hi"])), Fraction(draw(st.integers(0, 4)), 4),
                         Fraction(draw(st.integers(0, 4)), 4))
        for i in ids
    )
    edges = frozenset((a, b) for a in ids for b in ids if a != b and draw(st.integers(0, 3)) == 0)
    roots = frozenset(draw(st.sets(st.sampled_from(ids), max_size=2)))
    return CapabilityGraph(verts, edges, roots)


RISK = RiskModel(("lo", "hi"), {}, {"lo": Fraction(1), "hi": Fraction(3)}, {"lo": Fraction(1), "hi": Fraction(3)})


@given(cap_graphs(), st.integers(1, 4), st.data())
def test_proxy_monotone_under_growth(g, h, data):
    base = proxy_reach_measure(g, h, RISK)
    ids = [v.id for v in g.vertices]
    a, b = data.draw(st.sampled_from(ids)), data.draw(st.sampled_from(ids))
    if a != b:
        bigger = CapabilityGraph(g.vertices, g.edges | {(a, b)}, g.roots)
        assert proxy_reach_measure(bigger, h, RISK) >= base
    extra = CapabilityVertex("new", "hi", Fraction(1), Fraction(1))
    grown = CapabilityGraph(g.vertices + (extra,), g.edges | {(a, "new")}, g.roots)
    assert proxy_reach_measure(grown, h, RISK) >= base


# ------------------------------------------------------------- membrane runs


@slow
@given(SEEDS)
def test_compliant_runs_hold_every_law(seed):
    sc = scenario_from_dict(random_compliant_doc(random.Random(seed)))
    res = run_scenario(sc)
    rep = audit_governability(res.log, res.ledger, sc.policies, res.executor.incidents)
    assert rep.violation_count == 0
    for r in res.log.records:
        if r["commit_ext"]:
            assert r["commit_pi"]
        if r["tags"]:
            assert r["mediated"] and r["witness_seq"] is not None
        assert bool(r["tags"]) == (("FIRST" in r["tags"]) or ("SECOND_T" in r["tags"]))
        assert ("FIRST" in r["tags"]) == (r["commit_ext"] and r.get("decision") in (None, "ALLOW")) or not r["mediated"]
    for r in t_ext_growth_steps(res.log):
        assert r["commit_pi"] or r["stimulated"] or any(h["provenance"] == "EXOGENOUS" for h in r["hooks"])


# ------------------------------------------------------------- analyses


@given(st.lists(st.integers(0, 6), min_size=1, max_size=40), st.lists(st.integers(0, 3), min_size=40, max_size=40),
       st.integers(0, 5))
def test_backlog_nonnegative_and_monotone(arr, bump, r):
    cfg = BacklogConfig(r_obs=Fraction(r))
    base = simulate_backlog(cfg, arr, len(arr)).backlog
    more = simulate_backlog(cfg, [a + d for a, d in zip(arr, bump)], len(arr)).backlog
    assert all(b >= 0 for b in base)
    assert all(m >= b for m, b in zip(more, base))


@given(st.integers(1, 6), st.integers(1, 4))
def test_constant_overload_is_linear(excess, r):
    rep = simulate_backlog(BacklogConfig(r_obs=Fraction(r)), [r + excess] * 30, 30)
    assert rep.backlog == [t * excess for t in range(31)]


@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_pigeonhole_exact(kappa, t, data):
    model = ObserverModel.full_rate(("a", "b"), kappa)
    bound = trace_bound(model, t)
    n = data.draw(st.integers(1, min(bound + 3, 80)))
    fam = [[data.draw(st.lists(st.sampled_from("ab"), min_size=kappa, max_size=kappa)) for _ in range(t)]
           for _ in range(n)]
    hit = find_observer_collision(model, t, fam)
    if n > bound:
        assert hit is not None
    if hit is not None:
        assert fam[hit.first] == fam[hit.second] and hit.first != hit.second
