"""Build-once/reuse-many DFA checkpoints.

Binary layout (all integers little-endian):

    magic           8 bytes  b"PKGGDFA\\0"
    format_version  u32
    list_digest     32 bytes
    alphabet_len    u32, then alphabet bytes
    name_count      u32
    state_count     u32
    edge_count      u32
    accepting       ceil(state_count / 8) bytes (bitset)
    node_first      state_count * u32
    node_count      state_count bytes
    edge_chars      edge_count bytes
    edge_targets    edge_count * u32
    crc32           u32 over everything above

Fixed-width sections load as whole arrays, which keeps loading orders of
magnitude cheaper than construction.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from array import array
from dataclasses import dataclass, field
from pathlib import Path

from .dfa import Dfa, build_dfa
from .packages import PackageList, load_list

MAGIC = b"PKGGDFA\x00"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class StaleCacheError(CheckpointError):
    """Checkpoint was built from a different allowlist snapshot."""


def _le(arr: array) -> bytes:
    import sys

    data = arr.tobytes()
    if sys.byteorder == "big":  # pragma: no cover - LE hosts everywhere here
        swapped = array(arr.typecode, arr)
        swapped.byteswap()
        data = swapped.tobytes()
    return data


def _from_le(typecode: str, data: bytes) -> array:
    import sys

    arr = array(typecode)
    arr.frombytes(data)
    if sys.byteorder == "big":  # pragma: no cover
        arr.byteswap()
    return arr


def save_checkpoint(dfa: Dfa, path: str | Path) -> int:
    """Serialize ``dfa`` to ``path`` atomically; returns bytes written."""
    states = dfa.state_count
    edges = len(dfa.edge_targets)
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        dfa.list_digest,
        struct.pack("<I", len(dfa.alphabet)),
        dfa.alphabet.encode("ascii"),
        struct.pack("<III", dfa.name_count, states, edges),
        bytes(dfa.accepting),
        _le(dfa.node_first),
        bytes(dfa.node_count),
        bytes(dfa.edge_chars),
        _le(dfa.edge_targets),
    ]
    body = b"".join(parts)
    blob = body + struct.pack("<I", zlib.crc32(body))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(blob)


def load_checkpoint(path: str | Path, expected_digest: bytes | None = None) -> Dfa:
    """Load a checkpoint back into a Dfa, verifying checksum and digest."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4 + 32 + 4 + 12 + 4:
        raise ChecksumError(f"{path}: truncated checkpoint")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError(f"{path}: checksum mismatch")
    if body[:8] != MAGIC:
        raise BadMagicError(f"{path}: not a pkgguard DFA checkpoint")
    off = 8
    (version,) = struct.unpack_from("<I", body, off)
    off += 4
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported format version {version}")
    list_digest = body[off : off + 32]
    off += 32
    if expected_digest is not None and list_digest != expected_digest:
        raise StaleCacheError(f"{path}: checkpoint built from a different allowlist")
    (alpha_len,) = struct.unpack_from("<I", body, off)
    off += 4
    alphabet = body[off : off + alpha_len].decode("ascii")
    off += alpha_len
    name_count, states, edges = struct.unpack_from("<III", body, off)
    off += 12
    acc_len = (states + 7) >> 3
    accepting = bytearray(body[off : off + acc_len])
    off += acc_len
    node_first = _from_le("I", body[off : off + 4 * states])
    off += 4 * states
    node_count = bytearray(body[off : off + states])
    off += states
    edge_chars = bytearray(body[off : off + edges])
    off += edges
    edge_targets = _from_le("I", body[off : off + 4 * edges])
    off += 4 * edges
    if off != len(body):
        raise ChecksumError(f"{path}: trailing bytes in checkpoint body")
    return Dfa(
        edge_chars=edge_chars,
        edge_targets=edge_targets,
        node_first=node_first,
        node_count=node_count,
        accepting=accepting,
        alphabet=alphabet,
        name_count=name_count,
        list_digest=bytes(list_digest),
    )


@dataclass
class DfaCache:
    """Digest-keyed checkpoint directory with a build counter diagnostic."""

    cache_dir: Path
    builds: int = 0
    loads: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)

    def checkpoint_path(self, digest: bytes) -> Path:
        return self.cache_dir / f"{digest.hex()}.dfackpt"

    def ensure(self, package_list: PackageList) -> Dfa:
        """Load the checkpoint for this snapshot, building it on first use."""
        path = self.checkpoint_path(package_list.snapshot_digest)
        if path.exists():
            try:
                dfa = load_checkpoint(path, expected_digest=package_list.snapshot_digest)
                self.loads += 1
                return dfa
            except CheckpointError as exc:
                self.diagnostics.append(f"rebuilding after load failure: {exc}")
        dfa = build_dfa(package_list)
        self.builds += 1
        save_checkpoint(dfa, path)
        return dfa

    def ensure_from_file(self, list_path: str | Path, normalize: bool = True) -> Dfa:
        return self.ensure(load_list(list_path, normalize=normalize))


def ensure_cache(
    list_path: str | Path, cache_dir: str | Path, normalize: bool = True
) -> Dfa:
    """One-shot convenience around :class:`DfaCache`."""
    return DfaCache(Path(cache_dir)).ensure_from_file(list_path, normalize=normalize)
