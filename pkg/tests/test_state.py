from dataclasses import replace

import pytest

from govkernel.errors import UnlabeledTransitionError
from govkernel.membrane import apply_delta
from govkernel.state import (
    ComponentFlags,
    ExternalProjection,
    InstitutionState,
    Placement,
    TopologyGraph,
    classify_component,
    commit_ext,
    commit_pi,
    core_eq,
    project_ext,
)


def test_empty_projection():
    p = project_ext(InstitutionState())
    assert p.inbox == () and p.outbox == () and p.commit_ledger == () and dict(p.world_obs) == {}


def test_projection_ignores_internal_store():
    s = InstitutionState(s_int={"a": "1"})
    assert project_ext(s) == project_ext(replace(s, s_int={"a": "2", "b": "3"}))


def test_connector_install_keeps_projection(connector):
    s = connector.initial_state
    act = connector.automaton.action("a_cfg")
    s2 = apply_delta(s, act, "configured")
    assert project_ext(s) == project_ext(s2)
    assert not commit_pi("a_cfg", s, s2)
    assert not commit_ext("a_cfg", s, s2)


def test_identity_transition_commits_nothing():
    s = InstitutionState(s_ext={"k": "v"})
    assert not commit_pi("noop", s, s)
    assert not commit_ext("noop", s, s)


def test_outbox_append_is_projected_commit():
    s = InstitutionState()
    s2 = replace(s, boundary=ExternalProjection(outbox=((0, "hello"),)))
    assert commit_pi("send", s, s2)


def test_external_write_is_commit_ext():
    s = InstitutionState()
    assert commit_ext("write", s, replace(s, s_ext={"k": "v"}))


@pytest.mark.parametrize("fn", [commit_pi, commit_ext])
def test_unlabeled_transition_rejected(fn):
    s = InstitutionState()
    with pytest.raises(UnlabeledTransitionError):
        fn("", s, s)


def test_core_eq_ignores_ledger_length():
    s = InstitutionState()
    assert core_eq(s, s)
    assert core_eq(s, replace(s, ledger_len=5, head_hash="ab" * 32, step=3))


def test_core_eq_sees_topology_edge():
    topo = TopologyGraph(N=frozenset("ab"), V=frozenset("ab"))
    s = InstitutionState(s_topo=topo)
    s2 = replace(s, s_topo=replace(topo, E=frozenset({("a", "b")})))
    assert not core_eq(s, s2)


def test_topology_rejects_dangling_edge():
    with pytest.raises(ValueError):
        TopologyGraph(N=frozenset("a"), V=frozenset("a"), E=frozenset({("a", "b")}))


def test_negative_budget_rejected():
    with pytest.raises(ValueError):
        InstitutionState(s_budget=-1)


@pytest.mark.parametrize(
    "flags, expected",
    [
        ((True, True, True, True), Placement.INSIDE),
        ((True, False, True, True), Placement.BOUNDARY_COUPLED),
        ((False, False, False, False), Placement.EXTERNAL),
    ],
)
def test_classify_component(flags, expected):
    assert classify_component(ComponentFlags(*flags)) is expected


def test_classify_never_inside_without_control():
    import itertools

    for flags in itertools.product([False, True], repeat=4):
        placed = classify_component(ComponentFlags(*flags))
        if not all(flags[:3]):
            assert placed is not Placement.INSIDE
