"""Behavioral emulation of a DS1307-style real-time clock register file.

Timekeeping registers live at 0x00-0x07 in packed BCD, 56 bytes of NVRAM at
0x08-0x3F.  The calendar runs the chip's native 100-year cycle: years 00-99
map to 2000-2099, leap when the two-digit year is divisible by 4, and the
year wraps 99 -> 00.  The bus transaction layer is not modeled; access is
register-level.
"""

from __future__ import annotations

REG_SECONDS = 0x00
REG_MINUTES = 0x01
REG_HOURS = 0x02
REG_DAY = 0x03
REG_DATE = 0x04
REG_MONTH = 0x05
REG_YEAR = 0x06
REG_CONTROL = 0x07
NVRAM_START = 0x08
NVRAM_SIZE = 56
LAST_ADDR = 0x3F

CH_BIT = 0x80        # clock halt, bit 7 of the seconds register
HOUR_12_BIT = 0x40   # 12-hour mode select, bit 6 of the hours register
PM_BIT = 0x20

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
CYCLE_DAYS = 100 * 365 + 25
CYCLE_SECONDS = CYCLE_DAYS * 86400


class RtcAddressError(ValueError):
    """Register address outside 0x00-0x3F."""


class RtcValueError(ValueError):
    """Register write that does not decode to a valid calendar value."""


def bcd_encode(n: int) -> int:
    if not 0 <= n <= 99:
        raise RtcValueError(f"BCD encode needs 0..99, got {n}")
    return ((n // 10) << 4) | (n % 10)


def bcd_decode(b: int) -> int:
    hi, lo = b >> 4, b & 0x0F
    if hi > 9 or lo > 9:
        raise RtcValueError(f"invalid BCD byte 0x{b:02X}")
    return hi * 10 + lo


def days_in_month(yy: int, month: int) -> int:
    if month == 2 and yy % 4 == 0:
        return 29
    return _DAYS_IN_MONTH[month - 1]


def _days_before_year(yy: int) -> int:
    return yy * 365 + (yy + 3) // 4


def to_cycle_seconds(yy: int, month: int, date: int, hh: int, mm: int, ss: int) -> int:
    """Seconds since 00-01-01 00:00:00 within the 100-year cycle."""
    days = _days_before_year(yy) + date - 1
    for m in range(1, month):
        days += days_in_month(yy, m)
    return days * 86400 + hh * 3600 + mm * 60 + ss


def from_cycle_seconds(total: int) -> tuple[int, int, int, int, int, int]:
    """Inverse of to_cycle_seconds; total must already be wrapped to the cycle."""
    days, rest = divmod(total, 86400)
    hh, rest = divmod(rest, 3600)
    mm, ss = divmod(rest, 60)
    yy = days // 366  # never overshoots: every year has >= 365 days
    while _days_before_year(yy + 1) <= days:
        yy += 1
    days -= _days_before_year(yy)
    month = 1
    while days >= days_in_month(yy, month):
        days -= days_in_month(yy, month)
        month += 1
    return yy, month, days + 1, hh, mm, ss


class Rtc:
    """One register file.  Single writer; copy freely with .copy()."""

    def __init__(
        self,
        yy: int = 0,
        month: int = 1,
        date: int = 1,
        hh: int = 0,
        mm: int = 0,
        ss: int = 0,
        dow: int = 6,
        halted: bool = False,
    ) -> None:
        self._validate_calendar(yy, month, date, hh, mm, ss)
        if not 1 <= dow <= 7:
            raise RtcValueError(f"day-of-week must be 1..7, got {dow}")
        self.cycle_s = to_cycle_seconds(yy, month, date, hh, mm, ss)
        self.dow = dow
        self.halted = halted
        self.control = 0x00
        self.nvram = bytearray(NVRAM_SIZE)

    @staticmethod
    def _validate_calendar(yy: int, month: int, date: int, hh: int, mm: int, ss: int) -> None:
        if not 0 <= yy <= 99:
            raise RtcValueError(f"year must be 00..99, got {yy}")
        if not 1 <= month <= 12:
            raise RtcValueError(f"month must be 1..12, got {month}")
        if not 1 <= date <= days_in_month(yy, month):
            raise RtcValueError(f"date {date} invalid for month {month} year {yy}")
        if not (0 <= hh <= 23 and 0 <= mm <= 59 and 0 <= ss <= 59):
            raise RtcValueError(f"invalid time {hh:02d}:{mm:02d}:{ss:02d}")

    def copy(self) -> "Rtc":
        other = Rtc.__new__(Rtc)
        other.cycle_s = self.cycle_s
        other.dow = self.dow
        other.halted = self.halted
        other.control = self.control
        other.nvram = bytearray(self.nvram)
        return other

    # -- calendar views ----------------------------------------------------

    def datetime_tuple(self) -> tuple[int, int, int, int, int, int]:
        return from_cycle_seconds(self.cycle_s)

    @property
    def minute_of_hour(self) -> int:
        return (self.cycle_s // 60) % 60

    @property
    def hour_of_day(self) -> int:
        return (self.cycle_s // 3600) % 24

    @property
    def hour_mark(self) -> int:
        """Monotone hour index within the century cycle (for once-per-hour dedup)."""
        return self.cycle_s // 3600

    def tick(self, dt_s: int) -> None:
        """Advance the calendar; no-op while the CH bit is set."""
        if dt_s < 0:
            raise ValueError(f"dt_s must be >= 0, got {dt_s}")
        if self.halted or dt_s == 0:
            return
        raw = self.cycle_s + dt_s
        days_crossed = raw // 86400 - self.cycle_s // 86400
        self.cycle_s = raw % CYCLE_SECONDS
        self.dow = (self.dow - 1 + days_crossed) % 7 + 1

    # -- register access ---------------------------------------------------

    def read_byte(self, addr: int) -> int:
        if not 0 <= addr <= LAST_ADDR:
            raise RtcAddressError(f"address 0x{addr:02X} out of range")
        if addr >= NVRAM_START:
            return self.nvram[addr - NVRAM_START]
        yy, month, date, hh, mm, ss = self.datetime_tuple()
        if addr == REG_SECONDS:
            return bcd_encode(ss) | (CH_BIT if self.halted else 0)
        if addr == REG_MINUTES:
            return bcd_encode(mm)
        if addr == REG_HOURS:
            return bcd_encode(hh)  # always rendered in 24 h mode
        if addr == REG_DAY:
            return self.dow
        if addr == REG_DATE:
            return bcd_encode(date)
        if addr == REG_MONTH:
            return bcd_encode(month)
        if addr == REG_YEAR:
            return bcd_encode(yy)
        return self.control

    def write_byte(self, addr: int, value: int) -> None:
        if not 0 <= addr <= LAST_ADDR:
            raise RtcAddressError(f"address 0x{addr:02X} out of range")
        if not 0 <= value <= 0xFF:
            raise RtcValueError(f"byte value out of range: {value}")
        if addr >= NVRAM_START:
            self.nvram[addr - NVRAM_START] = value
            return
        if addr == REG_CONTROL:
            self.control = value
            return
        if addr == REG_DAY:
            if not 1 <= value <= 7:
                raise RtcValueError(f"day-of-week must be 1..7, got {value}")
            self.dow = value
            return
        yy, month, date, hh, mm, ss = self.datetime_tuple()
        if addr == REG_SECONDS:
            ss = bcd_decode(value & ~CH_BIT)
            halted = bool(value & CH_BIT)
        else:
            halted = self.halted
        if addr == REG_MINUTES:
            mm = bcd_decode(value)
        elif addr == REG_HOURS:
            hh = self._decode_hours(value)
        elif addr == REG_DATE:
            date = bcd_decode(value)
        elif addr == REG_MONTH:
            month = bcd_decode(value)
        elif addr == REG_YEAR:
            yy = bcd_decode(value)
        self._validate_calendar(yy, month, date, hh, mm, ss)
        self.cycle_s = to_cycle_seconds(yy, month, date, hh, mm, ss)
        self.halted = halted

    @staticmethod
    def _decode_hours(value: int) -> int:
        # 12 h writes are accepted and normalized; reads always render 24 h.
        if value & HOUR_12_BIT:
            hour = bcd_decode(value & 0x1F)
            if not 1 <= hour <= 12:
                raise RtcValueError(f"12h hour must be 1..12, got {hour}")
            hour %= 12
            if value & PM_BIT:
                hour += 12
            return hour
        return bcd_decode(value & 0x3F)

    def set_time(self, hh: int | None = None, mm: int | None = None, ss: int | None = None) -> None:
        """Reseed wall-time fields in one shot, leaving the date alone."""
        yy, month, date, cur_hh, cur_mm, cur_ss = self.datetime_tuple()
        hh = cur_hh if hh is None else hh
        mm = cur_mm if mm is None else mm
        ss = cur_ss if ss is None else ss
        self._validate_calendar(yy, month, date, hh, mm, ss)
        self.cycle_s = to_cycle_seconds(yy, month, date, hh, mm, ss)
