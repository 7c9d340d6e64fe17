import random
import struct

import pytest

from pkgguard.cache import (
    MAGIC,
    BadMagicError,
    ChecksumError,
    DfaCache,
    StaleCacheError,
    UnsupportedVersionError,
    ensure_cache,
    load_checkpoint,
    save_checkpoint,
)
from pkgguard.dfa import build_dfa
from pkgguard.packages import build_list
from pkgguard.sim import synthetic_list


def dfa_equal(a, b):
    return (
        bytes(a.edge_chars) == bytes(b.edge_chars)
        and list(a.edge_targets) == list(b.edge_targets)
        and list(a.node_first) == list(b.node_first)
        and bytes(a.node_count) == bytes(b.node_count)
        and bytes(a.accepting) == bytes(b.accepting)
        and a.alphabet == b.alphabet
        and a.name_count == b.name_count
        and a.list_digest == b.list_digest
    )


def test_round_trip(tmp_path, small_dfa):
    path = tmp_path / "dfa.dfackpt"
    written = save_checkpoint(small_dfa, path)
    assert written == path.stat().st_size
    loaded = load_checkpoint(path)
    assert dfa_equal(small_dfa, loaded)
    assert set(loaded.language()) == set(small_dfa.language())


def test_round_trip_synthetic(tmp_path):
    dfa = build_dfa(synthetic_list(500, seed=11))
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(dfa, path)
    assert dfa_equal(dfa, load_checkpoint(path))


def test_expected_digest_mismatch(tmp_path, small_dfa):
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(small_dfa, path)
    with pytest.raises(StaleCacheError):
        load_checkpoint(path, expected_digest=b"\x00" * 32)
    assert dfa_equal(small_dfa, load_checkpoint(path, expected_digest=small_dfa.list_digest))


def test_bad_magic(tmp_path, small_dfa):
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(small_dfa, path)
    blob = bytearray(path.read_bytes())
    blob[:8] = b"NOTADFA\x00"
    # fix up the CRC so the magic check is what fires
    import zlib

    blob[-4:] = struct.pack("<I", zlib.crc32(bytes(blob[:-4])))
    path.write_bytes(bytes(blob))
    with pytest.raises(BadMagicError):
        load_checkpoint(path)


def test_unsupported_version(tmp_path, small_dfa):
    import zlib

    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(small_dfa, path)
    blob = bytearray(path.read_bytes())
    struct.pack_into("<I", blob, len(MAGIC), 99)
    blob[-4:] = struct.pack("<I", zlib.crc32(bytes(blob[:-4])))
    path.write_bytes(bytes(blob))
    with pytest.raises(UnsupportedVersionError):
        load_checkpoint(path)


def test_truncation_detected(tmp_path, small_dfa):
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(small_dfa, path)
    blob = path.read_bytes()
    for cut in (1, 4, len(blob) // 2, len(blob) - 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(ChecksumError):
            load_checkpoint(path)


def test_bit_flip_corruption_detected(tmp_path):
    dfa = build_dfa(synthetic_list(200, seed=3))
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(dfa, path)
    blob = path.read_bytes()
    rng = random.Random(0)
    detected = 0
    trials = 500
    for _ in range(trials):
        corrupted = bytearray(blob)
        pos = rng.randrange(len(blob))
        corrupted[pos] ^= 1 << rng.randrange(8)
        path.write_bytes(bytes(corrupted))
        try:
            load_checkpoint(path)
        except Exception:
            detected += 1
    assert detected / trials >= 0.999


def test_cache_builds_once(tmp_path, small_list):
    cache = DfaCache(tmp_path)
    first = cache.ensure(small_list)
    second = cache.ensure(small_list)
    third = cache.ensure(small_list)
    assert cache.builds == 1
    assert cache.loads == 2
    assert dfa_equal(first, second) and dfa_equal(second, third)


def test_cache_rebuilds_after_list_edit(tmp_path):
    list_path = tmp_path / "pkgs.txt"
    list_path.write_text("numpy\nscipy\n")
    cache = DfaCache(tmp_path / "cache")
    cache.ensure_from_file(list_path)
    cache.ensure_from_file(list_path)
    assert cache.builds == 1
    list_path.write_text("numpy\nscipy\nrequests\n")
    dfa = cache.ensure_from_file(list_path)
    assert cache.builds == 2
    assert dfa.accepts("requests")


def test_cache_recovers_from_corrupt_checkpoint(tmp_path, small_list):
    cache = DfaCache(tmp_path)
    cache.ensure(small_list)
    ckpt = cache.checkpoint_path(small_list.snapshot_digest)
    ckpt.write_bytes(b"garbage")
    dfa = cache.ensure(small_list)
    assert cache.builds == 2
    assert cache.diagnostics
    assert dfa.accepts("numpy")


def test_ensure_cache_convenience(tmp_path):
    list_path = tmp_path / "pkgs.txt"
    list_path.write_text("numpy\n")
    dfa = ensure_cache(list_path, tmp_path / "cache")
    assert dfa.accepts("numpy")
    assert (tmp_path / "cache").exists()


def test_save_is_atomic_no_tmp_left_behind(tmp_path, small_dfa):
    path = tmp_path / "dfa.dfackpt"
    save_checkpoint(small_dfa, path)
    save_checkpoint(small_dfa, path)  # overwrite in place
    leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
    assert leftovers == []
    assert dfa_equal(small_dfa, load_checkpoint(path))
