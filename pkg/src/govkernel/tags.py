"""Effect tags for executed transitions."""

from __future__ import annotations

import enum
from typing import FrozenSet, Mapping, Optional

from .errors import ComparisonError
from .state import InstitutionState, commit_ext, core_eq, region

DEFAULT_REGIONS = {"caps": "caps/", "tools": "tools/"}


class Tag(str, enum.Enum):
    FIRST = "FIRST"
    SECOND_T = "SECOND_T"
    SECOND_P = "SECOND_P"


TagSet = FrozenSet[Tag]
EMPTY: TagSet = frozenset()


def tags_to_json(tags) -> list:
    return sorted(t.value for t in tags)


def tags_from_json(names) -> TagSet:
    return frozenset(Tag(n) for n in names)


def structural_expand(s: InstitutionState, s2: InstitutionState, regions: Mapping[str, str] = DEFAULT_REGIONS) -> bool:
    # over-approximate on purpose: any change in caps, tools, V or E counts
    caps, tools = regions["caps"], regions["tools"]
    return (
        region(s.s_int, caps) != region(s2.s_int, caps)
        or region(s.s_int, tools) != region(s2.s_int, tools)
        or s.s_topo.V != s2.s_topo.V
        or s.s_topo.E != s2.s_topo.E
    )


def policy_expand(s: InstitutionState, s2: InstitutionState, reach_before, reach_after) -> bool:
    if reach_before is None or reach_after is None:
        return False
    if reach_before.alphabet != reach_after.alphabet:
        raise ComparisonError(
            f"reach sets over {reach_before.alphabet!r} and {reach_after.alphabet!r}; "
            "declare a normalization encoding for both policy versions"
        )
    return core_eq(s, s2) and reach_after.traces > reach_before.traces


def tag_set(
    act,
    s: InstitutionState,
    s2: InstitutionState,
    reach_before=None,
    reach_after=None,
    regions: Optional[Mapping[str, str]] = None,
) -> TagSet:
    regions = regions or DEFAULT_REGIONS
    out = set()
    if commit_ext(act, s, s2):
        out.add(Tag.FIRST)
    if structural_expand(s, s2, regions):
        out.add(Tag.SECOND_T)
    if policy_expand(s, s2, reach_before, reach_after):
        out.add(Tag.SECOND_P)
    return frozenset(out)


def external_effect(act, s, s2, reach_before=None, reach_after=None, regions=None) -> bool:
    return bool(tag_set(act, s, s2, reach_before, reach_after, regions))
