"""Streaming context parser over generated text.

Tracks natural language vs fenced code, recognizes install-command lines
incrementally, and delimits the package-name regions where the intervenor
activates. Every decision is made per character, so the event stream is
identical no matter how the input is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dfa import Dfa, DfaCursor, StepResult, is_accepting, step
from .packages import NAME_ALPHABET
from .profiles import SEPARATORS, SUFFIX_OPENERS, EcosystemProfile

_NAME_CHARS = frozenset(NAME_ALPHABET)
_SEP_CHARS = frozenset(SEPARATORS)
_SUFFIX_CHARS = frozenset(SUFFIX_OPENERS)


class LineMode(Enum):
    SCAN = "scan"  # line not classified yet; prefix matching active
    DEAD = "dead"  # ordinary line, no further command checks
    AWAIT = "await"  # inside a command, before the next argument
    FLAG = "flag"  # consuming an option token (leading '-') verbatim
    NAME = "name"  # inside a package-name region
    SUFFIX = "suffix"  # version/extras suffix after a closed name


# -- region events -----------------------------------------------------------


@dataclass(frozen=True)
class EnterCode:
    info: str = ""


@dataclass(frozen=True)
class ExitCode:
    pass


@dataclass(frozen=True)
class EnterPackageName:
    pass


@dataclass(frozen=True)
class ExitPackageName:
    name: str
    accepted: bool
    start: int = -1  # character offset of the name in the full stream


@dataclass(frozen=True)
class CommandAbandoned:
    """An install command line ended without a single package name."""


class ParserState:
    """Single-owner streaming parser for one decoding session.

    ``dfa`` is optional: without it the parser still delimits name regions
    (used for offline re-parsing of stored transcripts), it just cannot judge
    acceptance.
    """

    def __init__(
        self,
        profile: EcosystemProfile,
        dfa: Dfa | None = None,
        bare_commands: bool = False,
    ):
        self.profile = profile
        self.dfa = dfa
        self.bare_commands = bare_commands

        self.in_fence = False
        self.fence_char = ""
        self.fence_len = 0
        self.line = ""
        self.mode = LineMode.SCAN
        self.names_on_line = 0
        self.name_buf = ""
        self.cursor: DfaCursor | None = None
        self.name_infeasible = False
        self.pending_backslash = False
        self.finished = False
        self.chars_fed = 0
        self.name_start = -1

        # probe-mode violation counters: a masked decoder never trips these
        self.infeasible_steps = 0
        self.rejected_exits = 0

        self._events: list = []

    # -- public surface -------------------------------------------------

    def feed(self, text: str) -> list:
        """Advance over decoded text; returns the region events it caused."""
        self._events = []
        for ch in text:
            self._feed_char(ch)
        return self._events

    def finish(self) -> list:
        """End of stream: close any open name, command, and fence."""
        self._events = []
        if self.finished:
            return []
        self.finished = True
        if self.pending_backslash:
            self.pending_backslash = False
        if self.mode is LineMode.NAME:
            self._exit_name()
            self.mode = LineMode.AWAIT
        if self.mode in (LineMode.AWAIT, LineMode.FLAG, LineMode.SUFFIX):
            if self.names_on_line == 0:
                self._emit(CommandAbandoned())
        if self.in_fence:
            self.in_fence = False
            self._emit(ExitCode())
        self.mode = LineMode.SCAN
        self.line = ""
        return self._events

    def in_intervention_zone(self) -> bool:
        """Whether masking is active (anywhere on an armed command tail)."""
        return self.mode in (
            LineMode.AWAIT,
            LineMode.NAME,
            LineMode.FLAG,
            LineMode.SUFFIX,
        )

    def current_cursor(self) -> DfaCursor | None:
        if self.mode is LineMode.NAME:
            return self.cursor
        return None

    def clone(self) -> "ParserState":
        """Cheap copy for lookahead probing of candidate tokens."""
        other = ParserState(self.profile, self.dfa, self.bare_commands)
        other.in_fence = self.in_fence
        other.fence_char = self.fence_char
        other.fence_len = self.fence_len
        other.line = self.line
        other.mode = self.mode
        other.names_on_line = self.names_on_line
        other.name_buf = self.name_buf
        other.cursor = self.cursor.clone() if self.cursor else None
        other.name_infeasible = self.name_infeasible
        other.chars_fed = self.chars_fed
        other.name_start = self.name_start
        other.pending_backslash = self.pending_backslash
        other.finished = self.finished
        return other

    # -- internals --------------------------------------------------------

    def _emit(self, event) -> None:
        self._events.append(event)

    def _feed_char(self, ch: str) -> None:
        self.chars_fed += 1
        if self.pending_backslash:
            self.pending_backslash = False
            if ch == "\n":
                # escaped newline: the command stays open on the next line
                if self.mode is not LineMode.DEAD:
                    self.mode = LineMode.AWAIT
                self.line = ""
                return
            # lone backslash: an opaque argument token
            if self.mode in (LineMode.AWAIT, LineMode.FLAG, LineMode.SUFFIX):
                self.mode = LineMode.FLAG
            # fall through and process ch normally

        if ch == "\n":
            self._end_line()
            return

        self.line += ch
        mode = self.mode
        if mode is LineMode.SCAN:
            self._scan_char(ch)
        elif mode is LineMode.AWAIT:
            self._await_char(ch)
        elif mode is LineMode.NAME:
            self._name_char(ch)
        elif mode in (LineMode.FLAG, LineMode.SUFFIX):
            if ch in _SEP_CHARS:
                self.mode = LineMode.AWAIT
            elif ch == "\\":
                self.pending_backslash = True
        # DEAD: nothing to do until end of line

    def _scan_char(self, ch: str) -> None:
        if not (self.in_fence or self.bare_commands):
            return
        s = self.line.lstrip()
        if not s:
            return
        if ch in _SEP_CHARS and s[:-1] in self.profile.install_prefixes:
            self.mode = LineMode.AWAIT
            self.names_on_line = 0
            return
        if not any(p.startswith(s) for p in self.profile.install_prefixes):
            self.mode = LineMode.DEAD

    def _await_char(self, ch: str) -> None:
        if ch in _SEP_CHARS:
            return
        if ch == "\\":
            self.pending_backslash = True
            return
        if ch == "-":
            self.mode = LineMode.FLAG
            return
        if ch in _NAME_CHARS:
            self.mode = LineMode.NAME
            self.name_buf = ""
            self.name_start = self.chars_fed - 1
            self.name_infeasible = False
            self.cursor = DfaCursor(self.dfa) if self.dfa is not None else None
            self._emit(EnterPackageName())
            self._name_char(ch)
            return
        # stray punctuation: treat as an opaque argument token
        self.mode = LineMode.FLAG

    def _name_char(self, ch: str) -> None:
        if ch in _NAME_CHARS:
            self.name_buf += ch
            if self.cursor is not None and not self.name_infeasible:
                if step(self.cursor, ch) is StepResult.INFEASIBLE:
                    self.name_infeasible = True
                    self.infeasible_steps += 1
            return
        if ch in _SEP_CHARS:
            self._exit_name()
            self.mode = LineMode.AWAIT
        elif ch in _SUFFIX_CHARS:
            self._exit_name()
            self.mode = LineMode.SUFFIX
        elif ch == "\\":
            self._exit_name()
            self.mode = LineMode.AWAIT
            self.pending_backslash = True
        else:
            self._exit_name()
            self.mode = LineMode.FLAG

    def _exit_name(self) -> None:
        accepted = (
            self.cursor is not None
            and not self.name_infeasible
            and is_accepting(self.cursor)
        )
        if self.cursor is not None and not accepted:
            self.rejected_exits += 1
        self.names_on_line += 1
        self._emit(
            ExitPackageName(
                name=self.name_buf, accepted=accepted, start=self.name_start
            )
        )
        self.name_buf = ""
        self.cursor = None
        self.name_infeasible = False

    def _end_line(self) -> None:
        mode = self.mode
        if mode is LineMode.NAME:
            self._exit_name()
            mode = LineMode.AWAIT
        if mode in (LineMode.AWAIT, LineMode.FLAG, LineMode.SUFFIX):
            if self.names_on_line == 0:
                self._emit(CommandAbandoned())
            self.names_on_line = 0
        else:
            if (
                mode is LineMode.SCAN
                and (self.in_fence or self.bare_commands)
                and self.line.lstrip() in self.profile.install_prefixes
            ):
                # a bare install prefix with no arguments at all
                self._emit(CommandAbandoned())
            self._check_fence_line()
        self.line = ""
        self.mode = LineMode.SCAN

    def _check_fence_line(self) -> None:
        stripped = self.line.strip()
        if not self.in_fence:
            for delim in self.profile.fence_delimiters:
                if stripped.startswith(delim):
                    self.in_fence = True
                    self.fence_char = delim[0]
                    self.fence_len = len(delim)
                    self._emit(EnterCode(info=stripped[len(delim):].strip()))
                    return
        else:
            if (
                stripped
                and set(stripped) == {self.fence_char}
                and len(stripped) >= self.fence_len
            ):
                self.in_fence = False
                self._emit(ExitCode())
