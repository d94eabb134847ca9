import copy
from dataclasses import replace

import pytest

from govkernel.errors import GovKernelError, LedgerError
from govkernel.membrane import Executor, apply_delta, run_scenario
from govkernel.scenario import load_fixture, scenario_from_dict
from govkernel.state import Decision, commit_ext
from govkernel.tags import Tag, tag_set


def test_config_act_is_mediated_and_witnessed(connector):
    ex = Executor(connector)
    res = ex.execute_mediated(connector.automaton.action("a_cfg"))
    assert res.decision is Decision.ALLOW
    assert res.tag_set == {Tag.SECOND_T}
    assert res.witness_seq == 0
    assert ex.ledger.records[0].tag_set == ("SECOND_T",)
    assert res.state_after.ledger_len == 1
    assert res.state_after.head_hash == ex.ledger.head_hash


def test_rejected_payment_changes_nothing_external(connector):
    ex = Executor(connector)
    before = ex.state
    res = ex.execute_mediated(connector.automaton.action("a_pay"))
    assert res.decision is Decision.REJECT
    assert res.tag_set == frozenset()
    assert ex.state.s_ext == before.s_ext and ex.state.s_budget == before.s_budget
    assert ex.state.loc == before.loc
    assert ex.ledger.records[0].decision == "REJECT"


def test_every_prefix_has_anchors_for_its_effects(office):
    ex = Executor(office, seed=5)
    allowed = 0
    for _ in range(25):
        ex.run(1)
        for rec in ex.log.records:
            if rec["tags"]:
                seq = rec["witness_seq"]
                assert seq is not None and seq < len(ex.ledger)
                assert ex.ledger.records[seq].act == rec["act"]
    allowed = sum(1 for r in ex.log.records if r["tags"] and r["decision"] == "ALLOW")
    effect_witnesses = sum(1 for w in ex.ledger.records if w.tag_set)
    assert allowed == effect_witnesses > 0


def test_deleting_rules_fails_closed(office):
    doc = copy.deepcopy(office.source)
    doc["policies"]["v1"]["rules"] = []
    sc = scenario_from_dict(doc)
    res = run_scenario(sc, horizon=30)
    mediated = [r for r in res.log.records if r["mediated"]]
    assert mediated and all(r["decision"] == "REJECT" for r in mediated)
    assert all(not r["tags"] for r in res.log.records)


def test_failed_append_leaves_no_trace(connector, monkeypatch):
    ex = Executor(connector)
    before = ex.state

    def boom(*a, **k):
        raise LedgerError("disk full")

    monkeypatch.setattr(ex.ledger, "append", boom)
    with pytest.raises(LedgerError):
        ex.execute_mediated(connector.automaton.action("a_cfg"))
    assert ex.state is before
    assert ex.log.records == []


def test_internal_path_refuses_boundary_acts(connector):
    ex = Executor(connector)
    with pytest.raises(GovKernelError):
        ex.execute_internal(connector.automaton.action("a_cfg"))


def test_fixed_policy_blocks_upgrade():
    doc = copy.deepcopy(load_fixture("policy_upgrade.yaml").source)
    doc["profiles"]["admissibility"]["u_policy"] = "FIXED"
    res = run_scenario(scenario_from_dict(doc))
    up = [r for r in res.log.records if r["act"] == "upgrade"][0]
    assert up["decision"] == "REJECT"
    assert res.state.adm.policy_version == "v1"
    assert any(i["kind"] == "POLICY_FIXED" for i in res.executor.incidents)


def test_upgrade_tagged_second_p():
    res = run_scenario(load_fixture("policy_upgrade.yaml"))
    up = [r for r in res.log.records if r["act"] == "upgrade"][0]
    assert up["tags"] == ["SECOND_P"] and up["decision"] == "ALLOW"
    assert not up["commit_pi"] and not up["commit_ext"]


def test_unregistered_version_rejects_with_incident(cross_version):
    ex = Executor(cross_version)
    ex.state = replace(ex.state, adm=ex.state.adm.with_version("v9"))
    res = ex.execute_mediated(cross_version.automaton.action("fetch"))
    assert res.decision is Decision.REJECT
    assert ex.incidents[0]["kind"] == "ADJUDICATION_ERROR"


def test_quarantine_is_held(cross_version):
    doc = copy.deepcopy(cross_version.source)
    doc["profiles"]["admissibility"]["policy_version"] = "v2"
    sc = scenario_from_dict(doc)
    ex = Executor(sc)
    res = ex.execute_mediated(sc.automaton.action("fetch"))
    assert res.decision is Decision.QUARANTINE
    assert ex.quarantine == [{"step": 0, "act": "fetch", "witness_seq": 0}]
    assert ex.state.boundary.outbox == ()


def test_same_seed_same_bytes(office):
    a, b = run_scenario(office), run_scenario(office)
    assert a.log.to_lines() == b.log.to_lines()
    assert a.ledger.to_bytes() == b.ledger.to_bytes()
    c = run_scenario(office, seed=999)
    assert c.log.to_lines() != a.log.to_lines()


def test_exogenous_delivery_is_unmediated(office):
    res = run_scenario(office)
    exo = [r for r in res.log.records if r["kind"] == "exogenous"]
    assert len(exo) == 2
    assert all(not r["mediated"] and r["commit_pi"] and not r["tags"] for r in exo)


def test_recorded_tags_match_recomputation(office):
    ex = Executor(office, seed=8)
    for _ in range(30):
        s = ex.state
        n = len(ex.log.records)
        ex.run(1)
        for rec in ex.log.records[n:]:
            if rec["kind"] != "transition" or rec["decision"] != "ALLOW":
                continue
            s2 = replace(ex.state, ledger_len=s.ledger_len, head_hash=s.head_hash)
            got = tag_set(rec["act"], s, s2, regions=office.regions)
            assert sorted(t.value for t in got) == rec["tags"]
            assert (Tag.FIRST in got) == commit_ext(rec["act"], s, s2)


def test_apply_delta_moves_location(connector):
    s = connector.initial_state
    s2 = apply_delta(s, connector.automaton.action("a_cfg"), "configured")
    assert s2.loc == "configured" and s2.step == 1


def test_unaffordable_spend_is_rejected_not_crashed(connector):
    doc = copy.deepcopy(connector.source)
    doc["initial_state"]["budget"] = 1
    sc = scenario_from_dict(doc)
    res = run_scenario(sc)
    pay = [r for r in res.log.records if r["act"] == "a_pay"][0]
    assert pay["decision"] == "REJECT" and pay["witness_seq"] == 1
    assert res.state.s_budget == 1
