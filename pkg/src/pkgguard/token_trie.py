"""Token-level view of the character DFA.

Subword tokens emit several characters per decoding step, while the DFA
transitions one character at a time. The token trie indexes every token's
decoded surface form so the feasible set A(s) — tokens whose whole surface
keeps the DFA on a live path — can be computed by walking trie and DFA in
lockstep instead of re-stepping each token.
"""

from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .dfa import Dfa
from .packages import NAME_ALPHABET

_NAME_CHARS = frozenset(NAME_ALPHABET)


class VocabularyError(Exception):
    pass


class TokenClass(Enum):
    NAME_PIECE = "name_piece"  # every character is a DFA-alphabet character
    TERMINATOR = "terminator"  # every character is a name terminator
    MIXED = "mixed"  # name characters mixed with anything else
    CONTROL = "control"  # no usable surface form

    @staticmethod
    def classify(surface: str | None, terminators: frozenset[str]) -> "TokenClass":
        if not surface:
            return TokenClass.CONTROL
        if all(ch in _NAME_CHARS for ch in surface):
            return TokenClass.NAME_PIECE
        # a token is only a safe terminator if *all* of it is terminator
        # characters: a trailing non-terminator tail would re-open a name
        # region with characters the mask never checked
        if surface[0] in terminators and all(ch in terminators for ch in surface):
            return TokenClass.TERMINATOR
        return TokenClass.MIXED


@dataclass(frozen=True)
class Vocabulary:
    """Dense token-id -> decoded-surface table plus control/EOS ids."""

    tokens: tuple[str, ...]
    control_ids: frozenset[int]
    eos_id: int | None = None

    @property
    def size(self) -> int:
        return len(self.tokens)

    def surface(self, token_id: int) -> str:
        return self.tokens[token_id]

    def digest(self) -> bytes:
        h = hashlib.sha256()
        for i, s in enumerate(self.tokens):
            h.update(f"{i}\t{json.dumps(s)}\n".encode())
        h.update(f"control={sorted(self.control_ids)};eos={self.eos_id}".encode())
        return h.digest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, s in enumerate(self.tokens):
                fh.write(json.dumps({"id": i, "text": s}) + "\n")
            meta = {"control": sorted(self.control_ids)}
            if self.eos_id is not None:
                meta["eos"] = self.eos_id
            fh.write(json.dumps(meta) + "\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Read a vocabulary export: JSON lines of {"id", "text"} pairs.

    A line of the form {"control": [...], "eos": id} declares control tokens.
    Tab-separated ``id<TAB>json-escaped-surface`` lines are accepted too.
    """
    tokens: dict[int, str] = {}
    control: set[int] = set()
    eos_id: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                obj = json.loads(line)
                if "control" in obj or "eos" in obj:
                    control.update(obj.get("control", ()))
                    eos_id = obj.get("eos", eos_id)
                    continue
                tid, text = obj["id"], obj["text"]
            else:
                tid_s, _, text_json = line.partition("\t")
                tid, text = int(tid_s), json.loads(text_json)
            if tid in tokens:
                raise VocabularyError(f"{path}:{lineno}: duplicate token id {tid}")
            tokens[tid] = text
    if not tokens:
        raise VocabularyError(f"{path}: empty vocabulary")
    size = max(tokens) + 1
    if set(tokens) != set(range(size)):
        raise VocabularyError(f"{path}: token ids are not dense 0..{size - 1}")
    # byte-fallback leftovers that are not valid standalone text act as control
    for tid, text in tokens.items():
        if text == "":
            control.add(tid)
    return Vocabulary(
        tokens=tuple(tokens[i] for i in range(size)),
        control_ids=frozenset(control),
        eos_id=eos_id,
    )


class _TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.terminal: list[int] = []


@dataclass
class TokenTrie:
    """Character trie over every non-control token surface form."""

    root: _TrieNode
    vocab_digest: bytes
    node_count: int

    def walk(self, surface: str) -> _TrieNode | None:
        node = self.root
        for ch in surface:
            node = node.children.get(ch)
            if node is None:
                return None
        return node


def build_token_trie(vocab: Vocabulary) -> TokenTrie:
    if vocab.size == 0:
        raise VocabularyError("empty vocabulary")
    root = _TrieNode()
    nodes = 1
    for tid, surface in enumerate(vocab.tokens):
        if tid in vocab.control_ids or not surface:
            continue
        node = root
        for ch in surface:
            child = node.children.get(ch)
            if child is None:
                child = _TrieNode()
                node.children[ch] = child
                nodes += 1
            node = child
        node.terminal.append(tid)
    return TokenTrie(root=root, vocab_digest=vocab.digest(), node_count=nodes)


def feasible_tokens(dfa: Dfa, state: int, trie: TokenTrie) -> frozenset[int]:
    """A(state): tokens whose full surface advances the DFA without rejection.

    Synchronized depth-first traversal of the token trie and the DFA;
    visits only jointly-reachable nodes.
    """
    result: list[int] = []
    stack = [(trie.root, state)]
    while stack:
        node, s = stack.pop()
        if node.terminal:
            result.extend(node.terminal)
        for ch, child in node.children.items():
            target = dfa.next_state(s, ch)
            if target >= 0:
                stack.append((child, target))
    return frozenset(result)


class FeasibleMemo:
    """Per-(dfa, trie) LRU cache of feasible sets keyed by DFA state id."""

    def __init__(self, dfa: Dfa, trie: TokenTrie, max_entries: int = 65_536):
        self.dfa = dfa
        self.trie = trie
        self.max_entries = max_entries
        self._cache: OrderedDict[int, frozenset[int]] = OrderedDict()
        self.hits = 0
        self.misses = 0

    def _check_identity(self, dfa: Dfa, trie: TokenTrie) -> None:
        if dfa is not self.dfa or trie is not self.trie:
            raise ValueError("memo was built for a different dfa/trie pair")

    def get(self, state: int) -> frozenset[int]:
        cached = self._cache.get(state)
        if cached is not None:
            self._cache.move_to_end(state)
            self.hits += 1
            return cached
        self.misses += 1
        feasible = feasible_tokens(self.dfa, state, self.trie)
        self._cache[state] = feasible
        if len(self._cache) > self.max_entries:
            self._cache.popitem(last=False)
        return feasible


def feasible_with_memo(
    dfa: Dfa, state: int, trie: TokenTrie, memo: FeasibleMemo
) -> frozenset[int]:
    memo._check_identity(dfa, trie)
    return memo.get(state)
