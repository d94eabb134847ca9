"""Acceptance criteria 1-11, one test per criterion.

Each test records a single PASS/FAIL line, printed in the terminal
summary as ``[PASS] criterion N: ...``.
"""

import dataclasses
import json
import random
import subprocess
import sys
import time
from dataclasses import replace
from fractions import Fraction


from generators import random_automaton_doc, random_compliant_doc
from oracles import chain_hashes, lindley, oracle_mu, oracle_reach, table_count
from govkernel import kernels
from govkernel.analysis import (
    BacklogConfig,
    ObserverModel,
    ScarcityConfig,
    ScarcityScenario,
    audit_governability,
    check_task_causation,
    emitted_trace,
    find_observer_collision,
    simulate_backlog,
    simulate_scarcity,
    trace_bound,
    uniform_arrivals,
)
from govkernel.errors import ReplayMismatch
from govkernel.ledger import MAGIC, Ledger, encode_record, make_record, replay, verify_chain
from govkernel.membrane import inject_violation, run_scenario
from govkernel.reach import enumerate_reach, proxy_reach_measure, risk_weighted_reach
from govkernel.scenario import CapabilityGraph, CapabilityVertex, RiskModel, load_fixture, scenario_from_dict

LAW_OF = {"BYPASS": "P-1a", "SPLIT_PHASE": "P-1b", "LEDGER_TAMPER": "SC4"}
FIXTURES = ["connector_install.yaml", "cross_version.yaml", "policy_upgrade.yaml", "office_assistant.yaml"]


def _audit(sc):
    res = run_scenario(sc)
    return res, audit_governability(res.log, res.ledger, sc.policies, res.executor.incidents)


def _compliant(seed, count):
    rng = random.Random(seed)
    return [scenario_from_dict(random_compliant_doc(rng)) for _ in range(count)]


def _automata(seed, count, versions=("v1",), limit=3000):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        doc = random_automaton_doc(rng, versions=versions)
        if len(versions) > 1:
            # make v2 a superset: anything v1 may do, v2 may do too
            for node in doc["automaton"]["nodes"].values():
                for a in node["actions"]:
                    if "guard" in a and "v1" in a["guard"]:
                        a["guard"] = ["v1", "v2"]
        sc = scenario_from_dict(doc)
        s = sc.initial_state
        prof = sc.admissibility
        if table_count(sc, s.loc, versions[-1], max(1, prof.strategy_class.memory_bound),
                       prof.horizon_H, sc.caps_of(s)) <= limit:
            out.append(sc)
    return out


# ---------------------------------------------------------------------------


def test_criterion_01_connector_install_tagging(accept):
    t0 = time.perf_counter()
    sc = load_fixture("connector_install.yaml")
    res, rep = _audit(sc)
    elapsed = time.perf_counter() - t0
    cfg = next(r for r in res.log.records if r["act"] == "a_cfg")
    pay = next(r for r in res.log.records if r["act"] == "a_pay")
    ok = (
        set(cfg["tags"]) == {"SECOND_T"}
        and cfg["commit_pi"] is False
        and cfg["commit_ext"] is False
        and cfg["mediated"] and cfg["witness_seq"] == 0
        and "FIRST" in pay["tags"] and pay["commit_ext"]
        and rep.verdict == "STRONGLY_GOVERNABLE"
        and elapsed < 1.0
    )
    accept(1, ok, f"a_cfg tags={sorted(cfg['tags'])} commit_pi={cfg['commit_pi']} "
                  f"commit_ext={cfg['commit_ext']} verdict={rep.verdict} in {elapsed:.3f}s (<1s)")


def _expected_injection(log, kind, at):
    """Step where ``kind`` should fire, read off the clean run of the same scenario.

    Runs are identical up to the injection point, and each round leaves
    exactly one transition or idle record, so the first eligible round at
    or after ``at`` is where the injection lands.  For BYPASS the log only
    gives an upper bound (a rejected act is also eligible), returned as a
    negative number.
    """
    rounds = [r for r in log.records if r["kind"] in ("transition", "idle")]
    for r in rounds[at:]:
        if r["kind"] != "transition" or not r["mediated"]:
            continue
        allowed_tagged = r["decision"] == "ALLOW" and bool(r["tags"])
        if kind == "LEDGER_TAMPER" and r["witness_seq"] is not None:
            return r["step"]
        if kind == "SPLIT_PHASE" and allowed_tagged:
            return r["step"]
        if kind == "BYPASS" and allowed_tagged:
            return -r["step"] - 1
    return None


def test_criterion_02_membrane_laws_and_injections(accept):
    t0 = time.perf_counter()
    scenarios = _compliant(2024, 50)
    violations = 0
    clean_logs = []
    for sc in scenarios:
        res, rep = _audit(sc)
        violations += rep.violation_count
        clean_logs.append(res.log)
    rng = random.Random(99)
    fired = {k: 0 for k in LAW_OF}
    exact = {k: 0 for k in LAW_OF}
    predicted = {k: 0 for k in LAW_OF}
    fixtures = [load_fixture(f) for f in ("connector_install.yaml", "office_assistant.yaml")]
    targets = list(zip(scenarios, clean_logs)) + [(sc, run_scenario(sc).log) for sc in fixtures]
    for sc, log in targets:
        horizon = sc.run.get("horizon", 10)
        for kind, law in LAW_OF.items():
            at = rng.randrange(max(1, horizon // 2))
            res, rep = _audit(inject_violation(kind, sc, at_step=at))
            step = res.executor.injected_step
            want = _expected_injection(log, kind, at)
            if want is not None and want < 0:
                hit = step is not None and step <= -want - 1
            elif kind == "BYPASS":
                # no allowed tagged act left; a rejected one may still be bypassed
                hit = True
            else:
                hit = step == want
            predicted[kind] += hit
            if step is None:
                exact[kind] += rep.violation_count == 0
                continue
            fired[kind] += 1
            if rep.laws_violated() == [law] and [f["step"] for f in rep.findings[law]][:1] == [step]:
                exact[kind] += 1
    elapsed = time.perf_counter() - t0
    n = len(targets)
    ok = (
        violations == 0
        and all(exact[k] == predicted[k] == n for k in LAW_OF)
        and all(fired[k] > 0 for k in LAW_OF)
        and elapsed < 30
    )
    detail = ", ".join(f"{k} fired {fired[k]}/{n} (as predicted {predicted[k]}/{n}), detected exactly "
                       f"{exact[k]}/{n}" for k in LAW_OF)
    accept(2, ok, f"50 compliant runs, {violations} violations; {detail}; {elapsed:.1f}s (<30s)")


def test_criterion_03_reach_matches_oracle(accept):
    t0 = time.perf_counter()
    backends = [False] + ([True] if kernels.compiled is not None else [])
    mismatches = 0
    for sc in _automata(3, 100):
        s, prof = sc.initial_state, sc.admissibility
        caps = sc.caps_of(s)
        m, H = prof.strategy_class.memory_bound, prof.horizon_H
        want_r = oracle_reach(sc, s.loc, "v1", m, H, caps)
        want_mu = oracle_mu(sc, s.loc, "v1", sc.approximation.L, H, caps)
        for use_compiled in backends:
            got_r = enumerate_reach(sc, s.loc, prof, caps, use_compiled=use_compiled).traces
            got_mu = risk_weighted_reach(sc, s.loc, prof, caps=caps, use_compiled=use_compiled)
            mismatches += (got_r != want_r) + (got_mu != want_mu)
    elapsed = time.perf_counter() - t0
    accept(3, mismatches == 0 and elapsed < 60,
           f"100 automata x {len(backends)} backends, {mismatches} reach/mu mismatches; {elapsed:.1f}s (<60s)")


def _random_cap_graph(rng):
    n = rng.randint(1, 6)
    ids = [f"v{i}" for i in range(n)]
    verts = tuple(CapabilityVertex(i, rng.choice(["lo", "hi"]), Fraction(rng.randint(0, 4), 4),
                                   Fraction(rng.randint(0, 4), 4)) for i in ids)
    edges = frozenset((a, b) for a in ids for b in ids if a != b and rng.random() < 0.25)
    roots = frozenset(rng.sample(ids, rng.randint(0, min(2, n))))
    return CapabilityGraph(verts, edges, roots)


def test_criterion_04_monotonicity(accept):
    bad_L = bad_pol = bad_proxy = 0
    for sc in _automata(4, 100):
        s = sc.initial_state
        caps = sc.caps_of(s)
        a0 = replace(sc.approximation, L=0)
        a1 = replace(sc.approximation, L=1)
        bad_L += risk_weighted_reach(sc, s.loc, sc.admissibility, approx=a0, caps=caps) > \
            risk_weighted_reach(sc, s.loc, sc.admissibility, approx=a1, caps=caps)
    for sc in _automata(5, 100, versions=("v1", "v2")):
        s = sc.initial_state
        caps = sc.caps_of(s)
        p1 = sc.admissibility
        p2 = p1.with_version("v2")
        bad_pol += not (enumerate_reach(sc, s.loc, p1, caps).traces <= enumerate_reach(sc, s.loc, p2, caps).traces)
        bad_pol += risk_weighted_reach(sc, s.loc, p1, caps=caps) > risk_weighted_reach(sc, s.loc, p2, caps=caps)
    risk = RiskModel(("lo", "hi"), {}, {"lo": Fraction(1), "hi": Fraction(3)},
                     {"lo": Fraction(1), "hi": Fraction(3)})
    rng = random.Random(6)
    for _ in range(100):
        g = _random_cap_graph(rng)
        h = rng.randint(1, 4)
        ids = [v.id for v in g.vertices]
        src = rng.choice(ids)
        grown = CapabilityGraph(g.vertices + (CapabilityVertex("new", "hi", Fraction(1), Fraction(1)),),
                                g.edges | {(src, "new"), (src, rng.choice(ids))} - {(src, src)}, g.roots)
        bad_proxy += proxy_reach_measure(grown, h, risk) < proxy_reach_measure(g, h, risk)
    ok = bad_L == bad_pol == bad_proxy == 0
    accept(4, ok, f"violations over 100 instances each: mu in L {bad_L}, policy superset {bad_pol}, "
                  f"proxy growth {bad_proxy}")


def test_criterion_05_replay(accept):
    total = mismatched = 0
    runs = [load_fixture(f) for f in FIXTURES] + _compliant(55, 20)
    for sc in runs:
        res = run_scenario(sc)
        for w in res.ledger.records:
            total += 1
            try:
                replay(w, sc.policies, res.ledger.contexts)
            except ReplayMismatch:
                mismatched += 1
    cv = load_fixture("cross_version.yaml")
    rounds = []
    for _ in range(2):
        res = run_scenario(cv)
        caught = []
        for w in res.ledger.records:
            try:
                replay(w, cv.policies, res.ledger.contexts, policy_version="v2")
            except ReplayMismatch as exc:
                caught.append((exc.seq, exc.stored, exc.replayed))
        rounds.append(caught)
    ok = mismatched == 0 and total > 0 and rounds[0] and rounds[0] == rounds[1]
    accept(5, ok, f"{total} witnesses replayed with {mismatched} mismatches; cross_version under v2 "
                  f"raises ReplayMismatch at {len(rounds[0])} witnesses, identically on rerun")


def _mutate(rec, field):
    value = getattr(rec, field)
    if field == "seq":
        new = value + 1
    elif field == "tag_set":
        new = ("SECOND_T",) if value != ("SECOND_T",) else ("FIRST",)
    elif field in ("ctx_abs", "prev_hash", "self_hash"):
        new = ("1" if value[0] != "1" else "2") + value[1:]
    elif field == "decision":
        new = "REJECT" if value != "REJECT" else "ALLOW"
    else:
        new = value + "x"
    return dataclasses.replace(rec, **{field: new})


def _ledger_of(records):
    return Ledger.from_bytes(MAGIC + b"".join(encode_record(r) for r in records))


def test_criterion_06_tamper_evidence(accept):
    rng = random.Random(6)
    records = []
    prev = "00" * 32
    for i in range(20):
        rec = make_record(i, f"a{rng.randrange(9)}", rng.choice(["ALLOW", "REJECT", "QUARANTINE"]),
                          rng.choice(["v1", "v2"]), f"{rng.getrandbits(256):064x}",
                          sorted(rng.sample(["FIRST", "SECOND_T", "SECOND_P"], rng.randint(1, 2))), prev)
        records.append(rec)
        prev = rec.self_hash
    assert chain_hashes(records) == [r.self_hash for r in records]
    clean = verify_chain(_ledger_of(records)).ok
    fields = ["seq", "act", "decision", "policy_version", "ctx_abs", "tag_set", "prev_hash", "self_hash"]
    tried = caught = 0
    misses = []
    for k in range(20):
        for f in fields:
            mutated = list(records)
            mutated[k] = _mutate(records[k], f)
            rep = verify_chain(_ledger_of(mutated))
            tried += 1
            if not rep.ok and rep.first_bad_seq == k:
                caught += 1
            else:
                misses.append((k, f, rep.first_bad_seq))
    ok = clean and caught == tried == 160
    accept(6, ok, f"{caught}/{tried} single-field mutations flagged at first_bad_seq=k"
                  + (f"; misses {misses[:3]}" if misses else ""))


def test_criterion_07_task_causation(accept):
    breaches = 0
    growth = 0
    for sc in _compliant(77, 50):
        rep = check_task_causation(run_scenario(sc).log)
        breaches += len(rep.breaches)
        growth += len(rep.growth_steps)
    endo = check_task_causation(run_scenario(load_fixture("endogenous_insertion.yaml")).log)
    flagged = sorted({b["step"] for b in endo.breaches if b["assumption"] == 5})
    ok = breaches == 0 and growth > 0 and flagged == [2, 4]
    accept(7, ok, f"50 runs, {growth} T_ext growth steps, {breaches} unexplained; endogenous "
                  f"fixture flags assumption 5 at steps {flagged}")


def test_criterion_08_scarcity(accept):
    quiet = simulate_scarcity(ScarcityConfig(lambda_ext=Fraction(0), halt_window=10, horizon=100))
    stim = simulate_scarcity(ScarcityConfig(lambda_ext=Fraction(0), halt_window=10, horizon=100),
                             ScarcityScenario(stimulate_every=8))
    leak = simulate_scarcity(ScarcityConfig(lambda_ext=Fraction(0), halt_window=10, horizon=100),
                             ScarcityScenario(internal_progress_visible=True))
    leak_kinds = [d["kind"] for d in leak.diagnostics]
    suspects = [s["assumption"] for d in leak.diagnostics for s in d["suspects"]]
    ok = (quiet.halt_step == 10 and stim.survived and len(stim.steps) == 100
          and leak.survived and leak_kinds == ["ASSUMPTION_BREACH"] and 1 in suspects)
    accept(8, ok, f"no stimulation halts at step {quiet.halt_step}; stimulation every 8 survives "
                  f"to {len(stim.steps)}; leak case reports {leak_kinds} suspecting {suspects}")


def test_criterion_09_observer_collision(accept):
    import yaml
    from importlib import resources

    doc = yaml.safe_load(resources.files("govkernel.fixtures").joinpath("collision_9.yaml").read_text())
    model = ObserverModel.full_rate(doc["sigma_b"], doc["kappa"])
    machines = doc["machines"]
    col = find_observer_collision(model, doc["t"], machines)
    def trace_bytes(i):
        return json.dumps(emitted_trace(machines[i], doc["t"], model)).encode()

    verified = (col is not None and col.first != col.second
                and trace_bytes(col.first) == trace_bytes(col.second)
                and len(machines) > trace_bound(model, doc["t"]))
    rng = random.Random(9)
    wrong = 0
    for _ in range(200):
        sigma = ["a", "b", "c"][:rng.randint(1, 3)]
        m = ObserverModel.full_rate(sigma, rng.randint(1, 2))
        t = rng.randint(1, 2)
        bound = trace_bound(m, t)
        n = rng.randint(1, min(bound, 12))
        fam = [[rng.choices(sigma, k=m.kappa) for _ in range(t)] for _ in range(n)]
        table = [tuple(tuple(step) for step in mach) for mach in fam]
        has_dup = len(set(table)) < len(table)
        wrong += (find_observer_collision(m, t, fam) is not None) != has_dup
    ok = verified and wrong == 0
    pair = (col.first, col.second) if col else None
    accept(9, ok, f"collision_9 pair {pair} verified={verified}; 200 families at or below the bound, "
                  f"{wrong} disagreements with the duplicate check")


def test_criterion_10_backlog(accept):
    b10 = simulate_backlog(BacklogConfig(r_obs=Fraction(2)), [3] * 10, 10).final
    zero = all(b == 0 for b in simulate_backlog(BacklogConfig(r_obs=Fraction(3)), [3] * 200, 200).backlog)
    horizon = 1000
    stoch = simulate_backlog(BacklogConfig(r_obs=Fraction(2)), uniform_arrivals(2024, 0, 5), horizon)
    draws = random.Random(2024)
    oracle = lindley([draws.randint(0, 5) for _ in range(horizon)], [2] * horizon)
    # stability flips exactly at mean arrival == r_obs: periodic arrivals of mean r + d
    flips = []
    r = Fraction(2)
    for d in (Fraction(-1, 7), Fraction(0), Fraction(1, 7)):
        pattern = [r + d + 1, r + d - 1]
        arr = [pattern[t % 2] for t in range(400)]
        rep = simulate_backlog(BacklogConfig(r_obs=r), arr, 400)
        grows = rep.backlog[400] - rep.backlog[200] > 0
        flips.append((rep.stable, grows))
    ok = (b10 == 10 and zero and 400 <= stoch.final <= 600 and stoch.final == oracle[-1] == 569
          and flips == [(True, False), (True, False), (False, True)])
    accept(10, ok, f"B_10={b10}; A=r_obs keeps B=0: {zero}; stochastic B_1000={stoch.final} "
                   f"(oracle {oracle[-1]}); stable/growing below, at, above the mean: {flips}")


def test_criterion_11_byte_identical_runs(accept, tmp_path):
    from importlib import resources

    fixture = str(resources.files("govkernel.fixtures").joinpath("office_assistant.yaml"))
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = subprocess.run([sys.executable, "-m", "govkernel.cli", "run", fixture, "--seed", "42",
                               "-o", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = outs[0] == outs[1] and len(outs[0]) >= 4
    accept(11, same, f"two runs produced {len(outs[0])} artifacts ({', '.join(sorted(outs[0]))}), "
                     f"byte-identical={same}")
