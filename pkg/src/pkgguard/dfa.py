"""Character-level DFA accepting exactly the allowlist.

The automaton is a character trie over the (effective) entry set, stored in
flat arrays: per-node edge slices into global char/target arrays plus an
accepting bitset. A trie is already deterministic and dead-end free, which is
what prefix pruning needs, so no minimization is performed.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from enum import Enum

from .packages import NAME_ALPHABET, PackageList


class DfaError(Exception):
    pass


class StepResult(Enum):
    ADVANCED = "advanced"
    INFEASIBLE = "infeasible"


class Dfa:
    """Immutable trie automaton over package names.

    Nodes are dense ids, root is 0. Edges of node ``n`` live in
    ``edge_chars[first[n]:first[n]+count[n]]`` (sorted by char byte) with
    parallel targets in ``edge_targets``.
    """

    __slots__ = (
        "edge_chars",
        "edge_targets",
        "node_first",
        "node_count",
        "accepting",
        "alphabet",
        "name_count",
        "list_digest",
        "step_calls",
    )

    def __init__(
        self,
        edge_chars: bytearray,
        edge_targets: array,
        node_first: array,
        node_count: bytearray,
        accepting: bytearray,
        alphabet: str,
        name_count: int,
        list_digest: bytes,
    ):
        self.edge_chars = edge_chars
        self.edge_targets = edge_targets
        self.node_first = node_first
        self.node_count = node_count
        self.accepting = accepting
        self.alphabet = alphabet
        self.name_count = name_count
        self.list_digest = list_digest
        self.step_calls = 0  # diagnostic: dormancy checks count DFA work

    @property
    def start(self) -> int:
        return 0

    @property
    def state_count(self) -> int:
        return len(self.node_count)

    def is_accepting_state(self, state: int) -> bool:
        return bool(self.accepting[state >> 3] & (1 << (state & 7)))

    def next_state(self, state: int, char: str) -> int:
        """Target of delta(state, char), or -1 when infeasible."""
        self.step_calls += 1
        code = ord(char)
        if code > 0xFF:
            return -1
        first = self.node_first[state]
        end = first + self.node_count[state]
        idx = self.edge_chars.find(code, first, end)
        if idx < 0:
            return -1
        return self.edge_targets[idx]

    def out_edges(self, state: int):
        """(char, target) pairs leaving ``state``, in char order."""
        first = self.node_first[state]
        for i in range(first, first + self.node_count[state]):
            yield chr(self.edge_chars[i]), self.edge_targets[i]

    def accepts(self, s: str) -> bool:
        state = 0
        for ch in s:
            state = self.next_state(state, ch)
            if state < 0:
                return False
        return self.is_accepting_state(state)

    def language(self, max_len: int | None = None):
        """Enumerate every accepted string (optionally length-capped)."""
        stack = [(0, "")]
        while stack:
            state, prefix = stack.pop()
            if self.is_accepting_state(state):
                yield prefix
            if max_len is not None and len(prefix) >= max_len:
                continue
            for ch, target in self.out_edges(state):
                stack.append((target, prefix + ch))


@dataclass
class DfaCursor:
    """Mutable position inside a Dfa while a package name is being emitted."""

    dfa: Dfa
    state: int = 0
    consumed: int = 0

    def clone(self) -> "DfaCursor":
        return DfaCursor(self.dfa, self.state, self.consumed)


def build_dfa(package_list: PackageList) -> Dfa:
    """Compile the allowlist into a trie DFA.

    Entries are inserted in sorted order, so each node receives its children
    with ascending first characters; edges are flushed to the flat arrays when
    a node leaves the insertion stack.
    """
    names = package_list.effective_names()
    if not names:
        raise DfaError("cannot build a DFA from an empty package list")
    allowed = set(NAME_ALPHABET)
    for name in names:
        bad = set(name) - allowed
        if bad:
            raise DfaError(f"entry {name!r} outside the DFA alphabet: {sorted(bad)!r}")

    edge_chars = bytearray()
    edge_targets = array("I")
    node_first = array("I", (0,))
    node_count = bytearray((0,))
    n_nodes = 1  # root
    pending: list[list] = [[]]  # per stack depth: [char_code, target, ...] flat
    node_ids = [0]  # node id at each stack depth (depth == chars consumed)
    accepting_ids: list[int] = []

    def pop_to(depth: int) -> None:
        # edges of a node are final once it leaves the insertion stack;
        # flush them to the flat arrays and record the slice on the node
        while len(node_ids) > depth + 1:
            nid = node_ids.pop()
            edges = pending.pop()
            if edges:
                node_first[nid] = len(edge_targets)
                node_count[nid] = len(edges) >> 1
                edge_chars.extend(edges[0::2])
                edge_targets.extend(edges[1::2])

    prev = ""
    for name in names:
        # names are sorted and deduplicated: strictly increasing
        lcp = 0
        limit = min(len(prev), len(name))
        while lcp < limit and prev[lcp] == name[lcp]:
            lcp += 1
        pop_to(lcp)
        for ch in name[lcp:]:
            nid = n_nodes
            n_nodes += 1
            node_first.append(0)
            node_count.append(0)
            pending[-1].append(ord(ch))
            pending[-1].append(nid)
            pending.append([])
            node_ids.append(nid)
        accepting_ids.append(node_ids[-1])
        prev = name
    pop_to(-1)

    accepting = bytearray((n_nodes + 7) >> 3)
    for nid in accepting_ids:
        accepting[nid >> 3] |= 1 << (nid & 7)

    alphabet = "".join(sorted(set("".join(names))))
    return Dfa(
        edge_chars=edge_chars,
        edge_targets=edge_targets,
        node_first=node_first,
        node_count=node_count,
        accepting=accepting,
        alphabet=alphabet,
        name_count=len(names),
        list_digest=package_list.snapshot_digest,
    )


def step(cursor: DfaCursor, char: str) -> StepResult:
    """Consume one character; Infeasible leaves the cursor untouched."""
    target = cursor.dfa.next_state(cursor.state, char)
    if target < 0:
        return StepResult.INFEASIBLE
    cursor.state = target
    cursor.consumed += 1
    return StepResult.ADVANCED


def step_string(cursor: DfaCursor, s: str) -> StepResult:
    """Consume a whole string, all-or-nothing."""
    state = cursor.state
    n = 0
    for ch in s:
        state = cursor.dfa.next_state(state, ch)
        if state < 0:
            return StepResult.INFEASIBLE
        n += 1
    cursor.state = state
    cursor.consumed += n
    return StepResult.ADVANCED


def is_accepting(cursor: DfaCursor) -> bool:
    return cursor.dfa.is_accepting_state(cursor.state)
