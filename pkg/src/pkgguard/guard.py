"""Package-name intervenor: per-step logits masking.

Outside an install command the mask is all-ones and the model is untouched.
Inside one, a token is permitted only if it provably cannot complete an
invalid package name: fully-consumable name pieces come from the feasible
set A(s); terminator and other boundary-crossing tokens are vetted by
replaying their surface through a cloned parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dfa import Dfa
from .packages import NAME_ALPHABET
from .parser import LineMode, ParserState
from .profiles import EcosystemProfile
from .token_trie import FeasibleMemo, TokenClass, TokenTrie, Vocabulary

_NAME_CHARS = frozenset(NAME_ALPHABET)


class GuardError(Exception):
    pass


class GuardContractError(GuardError):
    """The caller violated the compute_mask/observe_token step contract."""


class DeadEndError(GuardError):
    """In-zone feasible set went empty under the Abort policy."""


class DeadEndPolicy(Enum):
    FORCE_NEWLINE = "force_newline"  # abandon the name via newline/EOS
    ABORT = "abort"


@dataclass
class LogitsMask:
    bits: np.ndarray  # bool, length |V|; True = permitted
    generation_step: int

    @property
    def permitted_count(self) -> int:
        return int(self.bits.sum())


@dataclass
class ObserveResult:
    events: list
    done: bool = False
    surface: str = ""


def apply_mask(logits: np.ndarray, mask: LogitsMask) -> np.ndarray:
    """Forbidden entries become the most-negative finite value of the dtype.

    A finite sentinel (rather than -inf) underflows to exactly zero
    probability in any softmax implementation.
    """
    logits = np.asarray(logits)
    if logits.shape != mask.bits.shape:
        raise GuardError(
            f"logits length {logits.shape} != mask length {mask.bits.shape}"
        )
    out = logits.copy()
    out[~mask.bits] = np.finfo(out.dtype).min
    return out


class GuardSession:
    """Single decoding stream under the guard.

    The immutable (dfa, trie, vocab) triple may be shared across sessions;
    the session owns the parser and alternates compute_mask / observe_token.
    """

    def __init__(
        self,
        dfa: Dfa,
        trie: TokenTrie,
        vocab: Vocabulary,
        profile: EcosystemProfile,
        policy: DeadEndPolicy = DeadEndPolicy.FORCE_NEWLINE,
        bare_commands: bool = False,
        memo: FeasibleMemo | None = None,
    ):
        if trie.vocab_digest != vocab.digest():
            raise GuardError("token trie was built from a different vocabulary")
        self.dfa = dfa
        self.trie = trie
        self.vocab = vocab
        self.profile = profile
        self.policy = policy
        self.memo = memo if memo is not None else FeasibleMemo(dfa, trie)
        self.memo._check_identity(dfa, trie)
        self.parser = ParserState(profile, dfa=dfa, bare_commands=bare_commands)
        self.step = 0
        self.done = False
        self.dead_ends = 0
        self._last_mask: LogitsMask | None = None
        self._classify_tokens()

    def _classify_tokens(self) -> None:
        n = self.vocab.size
        terms = self.profile.name_terminators
        self.token_class = [
            TokenClass.CONTROL
            if i in self.vocab.control_ids
            else TokenClass.classify(self.vocab.tokens[i], terms)
            for i in range(n)
        ]
        sep_or_nl = set(" \t\r\n")
        self.terminator_ids = [
            i for i in range(n) if self.token_class[i] is TokenClass.TERMINATOR
        ]
        # mixed tokens with no name characters cannot open a name themselves;
        # they are vetted by probing (e.g. "\n```" is fine, it just closes
        # the command). mixed tokens containing name characters stay excluded.
        self.mixed_probe_ids = [
            i
            for i in range(n)
            if self.token_class[i] is TokenClass.MIXED
            and not any(ch in _NAME_CHARS for ch in self.vocab.tokens[i])
        ]
        self.flag_start_ids = [
            i
            for i in range(n)
            if self.token_class[i] is TokenClass.NAME_PIECE
            and self.vocab.tokens[i].startswith("-")
        ]
        # fast path inside flag/suffix tokens: anything without whitespace
        # stays within the current argument and is harmless
        self.ws_free = np.array(
            [
                i not in self.vocab.control_ids
                and bool(self.vocab.tokens[i])
                and not any(ch in sep_or_nl for ch in self.vocab.tokens[i])
                for i in range(n)
            ],
            dtype=bool,
        )
        self.ws_containing_ids = [
            i
            for i in range(n)
            if i not in self.vocab.control_ids
            and self.vocab.tokens[i]
            and not self.ws_free[i]
        ]
        self.newline_only_ids = [
            i
            for i in range(n)
            if i not in self.vocab.control_ids and self.vocab.tokens[i] == "\n"
        ]

    # -- per-step API ------------------------------------------------------

    def _probe(self, token_id: int) -> bool:
        """Would emitting this token ever strand or reject a name region?"""
        clone = self.parser.clone()
        clone.feed(self.vocab.tokens[token_id])
        return clone.infeasible_steps == 0 and clone.rejected_exits == 0

    def _set_feasible(self, bits: np.ndarray, state: int) -> None:
        ids = self.memo.get(state)
        if ids:
            bits[list(ids)] = True

    def compute_mask(self) -> LogitsMask:
        if self.done:
            raise GuardContractError("session already observed EOS")
        n = self.vocab.size
        mode = self.parser.mode
        eos = self.vocab.eos_id

        if not self.parser.in_intervention_zone():
            bits = np.ones(n, dtype=bool)
        elif mode is LineMode.NAME:
            bits = np.zeros(n, dtype=bool)
            cursor = self.parser.cursor
            self._set_feasible(bits, cursor.state)
            accepting = self.dfa.is_accepting_state(cursor.state)
            if accepting:
                for tid in self.terminator_ids:
                    if self._probe(tid):
                        bits[tid] = True
                if eos is not None:
                    bits[eos] = True
        elif mode is LineMode.AWAIT:
            bits = np.zeros(n, dtype=bool)
            self._set_feasible(bits, self.dfa.start)
            for tid in self.flag_start_ids:
                bits[tid] = True
            for tid in self.terminator_ids:
                surface = self.vocab.tokens[tid]
                if self.parser.names_on_line == 0 and "\n" not in surface:
                    continue  # no spacing churn before the first name
                if self._probe(tid):
                    bits[tid] = True
            for tid in self.mixed_probe_ids:
                if self._probe(tid):
                    bits[tid] = True
            if eos is not None:
                bits[eos] = True  # the stream may end mid-command
        else:  # FLAG or SUFFIX: the current argument passes through verbatim
            bits = self.ws_free.copy()
            for tid in self.ws_containing_ids:
                if self._probe(tid):
                    bits[tid] = True
            if eos is not None:
                bits[eos] = True

        self.step += 1
        mask = LogitsMask(bits=bits, generation_step=self.step)
        self._last_mask = mask
        return mask

    def handle_dead_end(self, mask: LogitsMask) -> LogitsMask:
        """Resolve an all-zero in-zone mask per the session policy."""
        if mask.bits.any():
            raise GuardContractError("dead-end handling requires an empty mask")
        self.dead_ends += 1
        if self.policy is DeadEndPolicy.ABORT:
            raise DeadEndError("no permitted token inside package-name zone")
        bits = np.zeros(self.vocab.size, dtype=bool)
        for tid in self.newline_only_ids:
            bits[tid] = True
        if self.vocab.eos_id is not None:
            bits[self.vocab.eos_id] = True
        if not bits.any():
            raise DeadEndError("vocabulary has no newline or EOS token to force")
        mask = LogitsMask(bits=bits, generation_step=mask.generation_step)
        self._last_mask = mask
        return mask

    def next_mask(self) -> LogitsMask:
        """compute_mask with the dead-end policy already applied."""
        mask = self.compute_mask()
        if self.parser.in_intervention_zone() and not mask.bits.any():
            mask = self.handle_dead_end(mask)
        return mask

    def observe_token(self, token_id: int) -> ObserveResult:
        if self._last_mask is None:
            raise GuardContractError("observe_token before compute_mask")
        if not 0 <= token_id < self.vocab.size:
            raise GuardError(f"token id {token_id} out of range")
        if not self._last_mask.bits[token_id]:
            raise GuardContractError(
                f"token {token_id} ({self.vocab.tokens[token_id]!r}) was masked"
            )
        self._last_mask = None
        if token_id == self.vocab.eos_id:
            events = self.parser.finish()
            self.done = True
            return ObserveResult(events=events, done=True, surface="")
        surface = self.vocab.tokens[token_id]
        events = self.parser.feed(surface)
        return ObserveResult(events=events, done=False, surface=surface)


def create_session(
    dfa: Dfa,
    trie: TokenTrie,
    vocab: Vocabulary,
    profile: EcosystemProfile,
    policy: DeadEndPolicy = DeadEndPolicy.FORCE_NEWLINE,
    **kwargs,
) -> GuardSession:
    return GuardSession(dfa, trie, vocab, profile, policy=policy, **kwargs)
