"""Crash-safe append-only log emulating the meter's permanent memory.

Every change to the energy register (and any config edit) is committed as a
fixed-width binary record.  A write interrupted partway through leaves an
invalid tail that recovery skips, so a reboot always restores the latest
fully-written record -- never garbage, never a future value.

Record layout (92 bytes, little-endian):

    offset  size  field
    0       8     seq            u64, strictly increasing
    8       8     ncu_pulses     u64
    16      8     ecu_pulses     u64
    24      1     config length  u8 (0..63)
    25      63    config bytes   zero-padded
    88      4     crc32          u32 over bytes 0..87

The CRC is the standard reflected CRC-32 (polynomial 0x04C11DB7), i.e.
``zlib.crc32``.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass

_BODY = struct.Struct("<QQQB63s")
_CRC = struct.Struct("<I")
RECORD_SIZE = _BODY.size + _CRC.size  # 92
MAX_CONFIG_BYTES = 63

DEFAULT_MAX_RECORDS = 4096


@dataclass(frozen=True)
class NvRecord:
    """One committed snapshot of the meter's persistent state."""

    seq: int
    ncu_pulses: int
    ecu_pulses: int
    config_digest: bytes


ZERO_RECORD = NvRecord(seq=0, ncu_pulses=0, ecu_pulses=0, config_digest=b"")


def _pack(record: NvRecord) -> bytes:
    body = _BODY.pack(
        record.seq,
        record.ncu_pulses,
        record.ecu_pulses,
        len(record.config_digest),
        record.config_digest,
    )
    return body + _CRC.pack(zlib.crc32(body))


def _unpack(raw: bytes) -> NvRecord | None:
    """Decode one 92-byte slot; None if the CRC (or length byte) is bad."""
    if len(raw) != RECORD_SIZE:
        return None
    body, (crc,) = raw[: _BODY.size], _CRC.unpack(raw[_BODY.size :])
    if zlib.crc32(body) != crc:
        return None
    seq, ncu, ecu, cfg_len, cfg = _BODY.unpack(body)
    if cfg_len > MAX_CONFIG_BYTES:
        return None
    return NvRecord(seq=seq, ncu_pulses=ncu, ecu_pulses=ecu, config_digest=cfg[:cfg_len])


def scan(raw: bytes) -> NvRecord:
    """Recover the latest committed record from a raw log image.

    Walks the fixed-width slots and returns the highest-seq record whose CRC
    verifies; a torn or corrupt tail degrades to the previous record, and an
    empty or fully corrupt image degrades to the all-zero default.
    """
    best = ZERO_RECORD
    for offset in range(0, len(raw) - RECORD_SIZE + 1, RECORD_SIZE):
        record = _unpack(raw[offset : offset + RECORD_SIZE])
        if record is not None and record.seq >= best.seq:
            best = record
    return best


class NvStore:
    """File-backed record log for one meter.

    Single-writer: the owning meter commits; anyone may recover a snapshot.
    When the log grows past ``max_records`` it is compacted down to just the
    latest record via an atomic replace.

    ``sync=False`` skips the per-commit fsync: recovery semantics are
    unchanged (the record layout and torn-tail repair do not depend on it)
    but a host crash may lose the last visible commits.  Simulation runs use
    it; anything modeling real hardware durability should keep the default.
    """

    def __init__(
        self, path: str, max_records: int = DEFAULT_MAX_RECORDS, sync: bool = True
    ) -> None:
        if max_records < 1:
            raise ValueError("max_records must be >= 1")
        self.path = path
        self.max_records = max_records
        self.sync = sync
        self._last = self.recover()
        # Repair alignment: drop any torn tail so new appends start on a
        # record boundary.
        self._records = self._count_valid()
        valid_bytes = self._records * RECORD_SIZE
        if os.path.exists(path) and os.path.getsize(path) != valid_bytes:
            with open(path, "r+b") as fh:
                fh.truncate(valid_bytes)

    def _count_valid(self) -> int:
        try:
            with open(self.path, "rb") as fh:
                raw = fh.read()
        except FileNotFoundError:
            return 0
        count = 0
        for offset in range(0, len(raw) - RECORD_SIZE + 1, RECORD_SIZE):
            if _unpack(raw[offset : offset + RECORD_SIZE]) is not None:
                count += 1
            else:
                break  # append-only log: nothing valid past a torn slot
        return count

    def recover(self) -> NvRecord:
        """Return the highest-seq valid record, or the zero record."""
        try:
            with open(self.path, "rb") as fh:
                return scan(fh.read())
        except FileNotFoundError:
            return ZERO_RECORD

    def commit(self, ncu_pulses: int, ecu_pulses: int, config_digest: bytes) -> int:
        """Append a record with the next seq; returns the seq written."""
        if len(config_digest) > MAX_CONFIG_BYTES:
            raise ValueError(
                f"config digest is {len(config_digest)} bytes; max {MAX_CONFIG_BYTES}"
            )
        record = NvRecord(
            seq=self._last.seq + 1,
            ncu_pulses=ncu_pulses,
            ecu_pulses=ecu_pulses,
            config_digest=bytes(config_digest),
        )
        with open(self.path, "ab") as fh:
            fh.write(_pack(record))
            if self.sync:
                fh.flush()
                os.fsync(fh.fileno())
        self._last = record
        self._records += 1
        if self._records > self.max_records:
            self._compact()
        return record.seq

    def _compact(self) -> None:
        """Rewrite the log with only the latest record (atomic replace)."""
        tmp = self.path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(_pack(self._last))
            if self.sync:
                fh.flush()
                os.fsync(fh.fileno())
        os.replace(tmp, self.path)
        self._records = 1

    @property
    def last(self) -> NvRecord:
        return self._last
