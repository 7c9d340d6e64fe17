"""Authoritative package allowlist: loading, normalization, snapshots.

The allowlist is the ground truth everything else is verified against:
a name is valid if and only if it is in here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

#: Characters a package name may contain. Anything else is rejected at load.
NAME_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789-_."
)
_NAME_CHARS = frozenset(NAME_ALPHABET)

#: Alphabet after normalization (lowercase, `_`/`.` folded to `-`).
NORMALIZED_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789-"

_FOLD = str.maketrans("_.", "--")


class PackageListError(Exception):
    """Raised for unrecoverable allowlist loading problems."""


def normalize_name(raw: str) -> str:
    """Canonical spelling of a package name: lowercase, `_`/`.` become `-`.

    Registries treat these spellings as the same package, so the guard must
    not distinguish them either. Idempotent.
    """
    return raw.lower().translate(_FOLD)


@dataclass(frozen=True)
class PackageName:
    raw: str
    normalized: str

    @classmethod
    def parse(cls, raw: str) -> "PackageName":
        if not raw:
            raise PackageListError("empty package name")
        bad = set(raw) - _NAME_CHARS
        if bad:
            raise PackageListError(
                f"package name {raw!r} contains invalid characters: {sorted(bad)!r}"
            )
        return cls(raw=raw, normalized=normalize_name(raw))


@dataclass(frozen=True)
class PackageList:
    """Immutable, deduplicated snapshot of valid package names.

    ``entries`` is sorted by effective (membership) form.  ``snapshot_digest``
    depends only on the effective entry set, so two loads of equivalent files
    compare equal.
    """

    entries: tuple[PackageName, ...]
    source_id: str
    snapshot_digest: bytes
    normalized: bool
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    @property
    def count(self) -> int:
        return len(self.entries)

    def effective_names(self) -> list[str]:
        """Names in the form membership is decided on."""
        if self.normalized:
            return [e.normalized for e in self.entries]
        return [e.raw for e in self.entries]

    def _member_set(self) -> frozenset[str]:
        # cached lazily on the instance despite frozen dataclass
        cached = self.__dict__.get("_members")
        if cached is None:
            cached = frozenset(self.effective_names())
            object.__setattr__(self, "_members", cached)
        return cached

    def contains(self, candidate: str) -> bool:
        """Oracle membership test. The DFA is verified against this."""
        if not candidate:
            return False
        if self.normalized:
            candidate = normalize_name(candidate)
        return candidate in self._member_set()

    def save(self, path: str | Path) -> int:
        """Write a line-based snapshot; returns bytes written."""
        text = "\n".join(self.effective_names()) + "\n"
        data = text.encode("utf-8")
        Path(path).write_bytes(data)
        return len(data)


def _digest(names: list[str]) -> bytes:
    h = hashlib.sha256()
    for name in names:
        h.update(name.encode("utf-8"))
        h.update(b"\n")
    return h.digest()


def build_list(
    names, source_id: str = "<memory>", normalize: bool = True
) -> PackageList:
    """Build a PackageList from an iterable of raw names (no file involved)."""
    entries: dict[str, PackageName] = {}
    diagnostics: list[str] = []
    for raw in names:
        try:
            pn = PackageName.parse(raw)
        except PackageListError as exc:
            diagnostics.append(str(exc))
            continue
        key = pn.normalized if normalize else pn.raw
        entries.setdefault(key, pn)
    ordered = tuple(entries[k] for k in sorted(entries))
    effective = sorted(entries)
    return PackageList(
        entries=ordered,
        source_id=source_id,
        snapshot_digest=_digest(effective),
        normalized=normalize,
        diagnostics=tuple(diagnostics),
    )


def load_list(
    path: str | Path, normalize: bool = True, strict: bool = False
) -> PackageList:
    """Load an allowlist from a one-name-per-line UTF-8 file.

    Blank lines and ``#`` comments are skipped. A line containing whitespace
    inside a name is rejected with a diagnostic (or aborts in strict mode).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise PackageListError(f"{path}: not valid UTF-8: {exc}") from exc

    candidates: list[str] = []
    diagnostics: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if any(ch.isspace() for ch in stripped) or "\x00" in stripped:
            msg = f"{path}:{lineno}: whitespace inside name: {stripped!r}"
            if strict:
                raise PackageListError(msg)
            diagnostics.append(msg)
            continue
        candidates.append(stripped)

    result = build_list(candidates, source_id=str(path), normalize=normalize)
    if strict and result.diagnostics:
        raise PackageListError(result.diagnostics[0])
    return PackageList(
        entries=result.entries,
        source_id=result.source_id,
        snapshot_digest=result.snapshot_digest,
        normalized=result.normalized,
        diagnostics=tuple(diagnostics) + result.diagnostics,
    )
