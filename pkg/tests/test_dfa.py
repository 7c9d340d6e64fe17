import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkgguard.dfa import (
    DfaCursor,
    DfaError,
    StepResult,
    build_dfa,
    is_accepting,
    step,
    step_string,
)
from pkgguard.packages import PackageList, PackageName, build_list


def test_single_name_trie():
    dfa = build_dfa(build_list(["a"]))
    assert dfa.state_count == 2
    assert dfa.accepts("a")
    assert not dfa.accepts("aa")
    assert not dfa.accepts("")


def test_two_name_exhaustive():
    dfa = build_dfa(build_list(["ab", "ac"]))
    entries = {"ab", "ac"}
    for length in range(4):
        for chars in itertools.product("abc", repeat=length):
            s = "".join(chars)
            assert dfa.accepts(s) == (s in entries), s
    # "a" is a live non-accepting prefix
    cursor = DfaCursor(dfa)
    assert step(cursor, "a") is StepResult.ADVANCED
    assert not is_accepting(cursor)


def test_step_examples():
    dfa = build_dfa(build_list(["numpy"]))
    cursor = DfaCursor(dfa)
    assert step(cursor, "n") is StepResult.ADVANCED
    fresh = DfaCursor(dfa)
    assert step(fresh, "z") is StepResult.INFEASIBLE
    assert fresh.state == dfa.start and fresh.consumed == 0


def test_step_to_accepting_state():
    # oracle: "nump" + "y" must land exactly on an entry of the list
    entries = ["numpy", "numba"]
    dfa = build_dfa(build_list(entries))
    cursor = DfaCursor(dfa)
    assert step_string(cursor, "nump") is StepResult.ADVANCED
    assert step(cursor, "y") is StepResult.ADVANCED
    assert is_accepting(cursor) == ("numpy" in entries)


def test_step_string_all_or_nothing():
    dfa = build_dfa(build_list(["requests"]))
    cursor = DfaCursor(dfa)
    assert step_string(cursor, "requ") is StepResult.ADVANCED
    assert not is_accepting(cursor)
    before = (cursor.state, cursor.consumed)
    assert step_string(cursor, "ests!") is StepResult.INFEASIBLE
    assert (cursor.state, cursor.consumed) == before
    fresh = DfaCursor(dfa)
    assert step_string(fresh, "requx") is StepResult.INFEASIBLE
    assert (fresh.state, fresh.consumed) == (dfa.start, 0)


def test_is_accepting_cases():
    dfa = build_dfa(build_list(["numpy"]))
    cursor = DfaCursor(dfa)
    assert not is_accepting(cursor)
    step_string(cursor, "num")
    assert not is_accepting(cursor)  # "num" is not in the list
    step_string(cursor, "py")
    assert is_accepting(cursor)


def test_non_alphabet_character_is_infeasible():
    dfa = build_dfa(build_list(["numpy"]))
    cursor = DfaCursor(dfa)
    assert step(cursor, " ") is StepResult.INFEASIBLE
    assert step(cursor, "é") is StepResult.INFEASIBLE


def test_out_of_alphabet_entry_fails_construction():
    bogus = PackageName(raw="bad name", normalized="bad name")
    plist = PackageList(
        entries=(bogus,), source_id="x", snapshot_digest=b"0" * 32, normalized=True
    )
    with pytest.raises(DfaError, match="bad name"):
        build_dfa(plist)


def test_empty_list_rejected():
    plist = PackageList(
        entries=(), source_id="x", snapshot_digest=b"0" * 32, normalized=True
    )
    with pytest.raises(DfaError):
        build_dfa(plist)


def _no_dead_ends(dfa) -> bool:
    # every reachable state must reach an accepting state (graph search)
    reach_accept: dict[int, bool] = {}

    def search(state, seen):
        if dfa.is_accepting_state(state):
            return True
        if state in reach_accept:
            return reach_accept[state]
        seen = seen | {state}
        ok = any(
            target not in seen and search(target, seen)
            for _, target in dfa.out_edges(state)
        )
        reach_accept[state] = ok
        return ok

    stack = [0]
    visited = {0}
    while stack:
        state = stack.pop()
        if not search(state, frozenset()):
            return False
        for _, target in dfa.out_edges(state):
            if target not in visited:
                visited.add(target)
                stack.append(target)
    return True


small_names = st.lists(
    st.text(alphabet="abcdefgh", min_size=1, max_size=6), min_size=1, max_size=40
)


@settings(max_examples=60, deadline=None)
@given(small_names)
def test_language_equals_entry_set(names):
    plist = build_list(names)
    dfa = build_dfa(plist)
    assert set(dfa.language()) == set(plist.effective_names())
    assert _no_dead_ends(dfa)
    total_chars = sum(len(n) for n in plist.effective_names())
    assert dfa.state_count <= 1 + total_chars


def test_step_is_deterministic():
    dfa = build_dfa(build_list(["alpha", "beta", "alps"]))
    rng = random.Random(1)
    for _ in range(200):
        state = rng.randrange(dfa.state_count)
        ch = rng.choice("abelpst")
        assert dfa.next_state(state, ch) == dfa.next_state(state, ch)
