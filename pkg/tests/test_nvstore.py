import os
import random
import zlib

import pytest

from wemsim.nvstore import (
    RECORD_SIZE,
    ZERO_RECORD,
    NvRecord,
    NvStore,
    scan,
)


def manual_record_bytes(seq: int, ncu: int, ecu: int, cfg: bytes) -> bytes:
    """Oracle: build one record byte-by-byte without the module's packer."""
    body = (
        seq.to_bytes(8, "little")
        + ncu.to_bytes(8, "little")
        + ecu.to_bytes(8, "little")
        + bytes([len(cfg)])
        + cfg.ljust(63, b"\x00")
    )
    return body + zlib.crc32(body).to_bytes(4, "little")


def test_record_size_is_fixed() -> None:
    assert RECORD_SIZE == 92
    assert len(manual_record_bytes(1, 2, 3, b"x")) == RECORD_SIZE


def test_byte_layout_matches_manual_packing(tmp_path) -> None:
    store = NvStore(str(tmp_path / "m.nvlog"))
    store.commit(100, 0, b"cfg")
    with open(store.path, "rb") as fh:
        assert fh.read() == manual_record_bytes(1, 100, 0, b"cfg")


def test_first_commit_gets_seq_one(tmp_path) -> None:
    store = NvStore(str(tmp_path / "m.nvlog"))
    assert store.commit(100, 0, b"cfg") == 1
    assert store.recover() == NvRecord(1, 100, 0, b"cfg")


def test_empty_store_recovers_zero_record(tmp_path) -> None:
    store = NvStore(str(tmp_path / "m.nvlog"))
    assert store.recover() == ZERO_RECORD
    assert ZERO_RECORD.seq == 0


def test_latest_wins(tmp_path) -> None:
    store = NvStore(str(tmp_path / "m.nvlog"))
    store.commit(10, 1, b"a")
    store.commit(20, 2, b"b")
    assert store.recover() == NvRecord(2, 20, 2, b"b")


def test_seq_continues_across_reopen(tmp_path) -> None:
    path = str(tmp_path / "m.nvlog")
    store = NvStore(path)
    for n in range(5):
        store.commit(n, 0, b"")
    reopened = NvStore(path)
    assert reopened.commit(99, 0, b"") == 6
    assert reopened.recover().seq == 6


def test_truncation_at_every_byte_offset(tmp_path) -> None:
    """Crash-safety oracle: any prefix recovers a previously committed record."""
    path = str(tmp_path / "m.nvlog")
    store = NvStore(path)
    committed = [ZERO_RECORD]
    rng = random.Random(21)
    for n in range(1, 51):
        cfg = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 64)))
        ncu, ecu = rng.randrange(10**9), rng.randrange(10**9)
        store.commit(ncu, ecu, cfg)
        committed.append(NvRecord(n, ncu, ecu, cfg))
    with open(path, "rb") as fh:
        raw = fh.read()
    assert len(raw) == 50 * RECORD_SIZE
    for cut in range(len(raw) + 1):
        recovered = scan(raw[:cut])
        assert recovered == committed[cut // RECORD_SIZE]


def test_reboot_after_torn_tail(tmp_path) -> None:
    path = str(tmp_path / "m.nvlog")
    store = NvStore(path)
    for n in range(1, 6):
        store.commit(n * 100, n, b"cfg")
    # Tear the last record mid-CRC, then "reboot".
    with open(path, "r+b") as fh:
        fh.truncate(5 * RECORD_SIZE - 2)
    rebooted = NvStore(path)
    assert rebooted.recover() == NvRecord(4, 400, 4, b"cfg")
    # New commits land on a clean boundary and win.
    assert rebooted.commit(999, 9, b"new") == 5
    assert rebooted.recover() == NvRecord(5, 999, 9, b"new")


def test_single_byte_corruption_degrades_to_previous(tmp_path) -> None:
    path = str(tmp_path / "m.nvlog")
    store = NvStore(path)
    store.commit(111, 1, b"one")
    store.commit(222, 2, b"two")
    with open(path, "rb") as fh:
        raw = bytearray(fh.read())
    for pos in range(RECORD_SIZE, 2 * RECORD_SIZE):
        clobbered = bytearray(raw)
        clobbered[pos] ^= 0xFF
        assert scan(bytes(clobbered)) == NvRecord(1, 111, 1, b"one")


def test_fully_corrupt_store_degrades_to_zero(tmp_path) -> None:
    path = str(tmp_path / "m.nvlog")
    with open(path, "wb") as fh:
        fh.write(b"\xde\xad" * 200)
    assert NvStore(path).recover() == ZERO_RECORD


def test_compaction_keeps_latest_and_seq(tmp_path) -> None:
    path = str(tmp_path / "m.nvlog")
    store = NvStore(path, max_records=4)
    for n in range(1, 11):
        store.commit(n, 0, b"")
    assert os.path.getsize(path) <= 4 * RECORD_SIZE
    assert store.recover() == NvRecord(10, 10, 0, b"")
    assert store.commit(11, 0, b"") == 11


def test_config_digest_roundtrip_and_limit(tmp_path) -> None:
    store = NvStore(str(tmp_path / "m.nvlog"))
    cfg = bytes(range(63))
    store.commit(1, 2, cfg)
    assert store.recover().config_digest == cfg
    with pytest.raises(ValueError):
        store.commit(1, 2, bytes(64))


def test_random_commit_truncate_property(tmp_path) -> None:
    """Randomized crash points across randomized commit sequences."""
    rng = random.Random(22)
    for case in range(10):
        path = str(tmp_path / f"m{case}.nvlog")
        store = NvStore(path)
        committed = [ZERO_RECORD]
        for n in range(1, rng.randrange(2, 12)):
            ncu, ecu = rng.randrange(10**6), rng.randrange(10**6)
            cfg = os.urandom(rng.randrange(0, 64))
            store.commit(ncu, ecu, cfg)
            committed.append(NvRecord(n, ncu, ecu, cfg))
        with open(path, "rb") as fh:
            raw = fh.read()
        for _ in range(25):
            cut = rng.randrange(0, len(raw) + 1)
            assert scan(raw[:cut]) in committed
