"""Encoder/decoder for the SMS reading telegram.

Wire grammar (ASCII, no whitespace):

    '#' '$' meter_id '$' ncu_display '$' ecu_display '$' '*'

where meter_id is 1-8 digits, and each display field is at least two integer
digits, a dot, and exactly two fractional digits.  The first field carries
normal consumption (total minus extra) and the second the extra consumption
recorded inside the peak window.

Decoding is total: any byte string either parses or raises
:class:`TelegramError` carrying the first offending position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .metering import units_display

_ID_RE = re.compile(r"[0-9]{1,8}")
_DISPLAY_RE = re.compile(r"[0-9]{2,}\.[0-9]{2}")

MAX_ID_DIGITS = 8


class TelegramError(ValueError):
    """Raised when a telegram fails to parse; `position` indexes the first bad byte."""

    def __init__(self, position: int, expected: str) -> None:
        super().__init__(f"offset {position}: expected {expected}")
        self.position = position
        self.expected = expected


@dataclass(frozen=True)
class Telegram:
    """One meter reading as transmitted over SMS."""

    meter_id: str
    ncu_display: str
    ecu_display: str

    def __post_init__(self) -> None:
        if not _ID_RE.fullmatch(self.meter_id):
            raise ValueError(f"meter id must be 1-{MAX_ID_DIGITS} digits: {self.meter_id!r}")
        for field in (self.ncu_display, self.ecu_display):
            if not _DISPLAY_RE.fullmatch(field):
                raise ValueError(f"display field must be NN…N.NN: {field!r}")


def from_counts(meter_id: str, ncu_pulses: int, ecu_pulses: int) -> Telegram:
    """Build the telegram for a register snapshot (fields rendered per display rule)."""
    return Telegram(
        meter_id=meter_id,
        ncu_display=units_display(ncu_pulses),
        ecu_display=units_display(ecu_pulses),
    )


def encode(t: Telegram) -> bytes:
    """Render the exact wire bytes for a telegram."""
    return f"#${t.meter_id}${t.ncu_display}${t.ecu_display}$*".encode("ascii")


class _Cursor:
    def __init__(self, raw: bytes) -> None:
        self.raw = raw
        self.pos = 0

    def fail(self, expected: str) -> TelegramError:
        return TelegramError(self.pos, expected)

    def take_literal(self, ch: str) -> None:
        if self.pos >= len(self.raw) or self.raw[self.pos] != ord(ch):
            raise self.fail(f"{ch!r}")
        self.pos += 1

    def _at_digit(self) -> bool:
        return self.pos < len(self.raw) and ord("0") <= self.raw[self.pos] <= ord("9")

    def take_digits(self, at_least: int, at_most: int | None = None) -> str:
        start = self.pos
        while self._at_digit() and (at_most is None or self.pos - start < at_most):
            self.pos += 1
        if self.pos - start < at_least:
            raise self.fail("digit")
        return self.raw[start : self.pos].decode("ascii")

    def take_display(self) -> str:
        whole = self.take_digits(at_least=2)
        self.take_literal(".")
        frac = self.take_digits(at_least=2, at_most=2)
        return f"{whole}.{frac}"


def decode(raw: bytes | str) -> Telegram:
    """Parse wire bytes back into a telegram; inverse of :func:`encode`.

    Raises :class:`TelegramError` at the first position where the input
    departs from the grammar (including trailing bytes past the trailer).
    """
    if isinstance(raw, str):
        try:
            raw = raw.encode("ascii")
        except UnicodeEncodeError as exc:
            raise TelegramError(exc.start, "ASCII byte") from None
    cur = _Cursor(raw)
    cur.take_literal("#")
    cur.take_literal("$")
    meter_id = cur.take_digits(at_least=1, at_most=MAX_ID_DIGITS)
    cur.take_literal("$")
    ncu = cur.take_display()
    cur.take_literal("$")
    ecu = cur.take_display()
    cur.take_literal("$")
    cur.take_literal("*")
    if cur.pos != len(raw):
        raise cur.fail("end of telegram")
    return Telegram(meter_id=meter_id, ncu_display=ncu, ecu_display=ecu)
