"""Meter controller: boot, hourly reporting, peak accounting, keypad, LCD.

The firmware owns one RTC, one NV log, and one modem session.  The harness
drives it with three entry points: ``on_second`` (energy accumulation),
``on_minute`` (report schedule + LCD refresh) and ``on_key`` (keypad events).
Every pulse-count change and every config edit is committed to the NV log
within the same simulated second, so a crash never loses more than the
current second's energy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .metering import (
    EnergyRegister,
    PeakPolicy,
    WindowUnit,
    accumulate,
    classify,
    units_display,
)
from .modem import CTRL_Z, AtSession, SmsMessage
from .nvstore import NvStore
from .rtc import REG_MINUTES, REG_SECONDS, Rtc
from .telegram import encode, from_counts

# Modes
RUN = "RUN"
PASSWORD_ENTRY = "PASSWORD_ENTRY"
MENU = "MENU"
EDIT_FIELD = "EDIT_FIELD"

# Keys beyond '0'-'9', '*', '#'
KEY_UP = "UP"
KEY_DOWN = "DOWN"
KEY_ENTER = "ENTER"

# Actions reported to the harness
SEND_TELEGRAM = "SEND_TELEGRAM"
COMMIT_NV = "COMMIT_NV"
LCD_UPDATE = "LCD_UPDATE"

REPORT_MINUTE = 2  # reading goes out when the RTC minute-of-hour hits this
BOOT_MINUTE = 1  # the RTC minute register is set to this at power-on

LCD_COLS = 16
MAX_INPUT_DIGITS = 16

# Menu items: (letter, label, config field edited; None = leave the menu)
MENU_ITEMS = (
    ("a", "ID", "meter_id"),
    ("b", "Fixed unit value", "load_limit_w"),
    ("c", "Mobile Number", "dest_number"),
    ("d", "Exit", None),
)


def _digits(text: str, lo: int, hi: int) -> bool:
    return lo <= len(text) <= hi and all(c in "0123456789" for c in text)


@dataclass
class MeterConfig:
    """Editable meter settings plus the peak window they parameterize."""

    meter_id: str
    dest_number: str
    load_limit_w: int = 500
    password: str = "1234"
    window_unit: WindowUnit = WindowUnit.MINUTE_OF_HOUR
    window_start: int = 5
    window_end: int = 8

    def __post_init__(self) -> None:
        if not _digits(self.meter_id, 1, 8):
            raise ValueError(f"meter_id must be 1-8 digits: {self.meter_id!r}")
        if not _digits(self.dest_number, 10, 12):
            raise ValueError(f"dest_number must be 10-12 digits: {self.dest_number!r}")
        if not _digits(self.password, 4, 4):
            raise ValueError("password must be exactly 4 digits")
        self.policy  # validates limit and window bounds

    @property
    def policy(self) -> PeakPolicy:
        return PeakPolicy(
            unit=self.window_unit,
            window_start=self.window_start,
            window_end=self.window_end,
            load_limit_w=self.load_limit_w,
        )

    def digest(self) -> bytes:
        """Serialize the keypad-editable fields for the NV record."""
        return f"{self.meter_id},{self.dest_number},{self.load_limit_w}".encode("ascii")


class Firmware:
    """One meter's control program."""

    def __init__(
        self, config: MeterConfig, rtc: Rtc, store: NvStore, session: AtSession
    ) -> None:
        self.config = config
        self.rtc = rtc
        self.store = store
        self.session = session
        self.mode = RUN
        self.register = EnergyRegister()
        self.input_buffer = ""
        self.menu_index = 0
        self.edit_field: str | None = None
        self.last_report_hour_mark: int | None = None
        self.outbox: list[SmsMessage] = []

    # -- boot -----------------------------------------------------------

    def boot(self) -> None:
        """Power-on: minute := 1, restore register/config from NV, enter RUN."""
        self.rtc.write_byte(REG_MINUTES, 0x01)
        self.rtc.write_byte(REG_SECONDS, 0x00)
        record = self.store.recover()
        self.register = EnergyRegister(
            ncu_pulses=record.ncu_pulses, ecu_pulses=record.ecu_pulses
        )
        if record.config_digest:
            self._apply_digest(record.config_digest)
        self.mode = RUN
        self.input_buffer = ""
        self.menu_index = 0
        self.edit_field = None
        self.last_report_hour_mark = None

    def _apply_digest(self, digest: bytes) -> None:
        try:
            meter_id, dest, limit = digest.decode("ascii").split(",")
        except (UnicodeDecodeError, ValueError):
            return  # unreadable digest: keep the configured values
        if _digits(meter_id, 1, 8) and _digits(dest, 10, 12) and limit.isascii() and limit.isdigit():
            self.config.meter_id = meter_id
            self.config.dest_number = dest
            self.config.load_limit_w = int(limit)

    # -- per-second energy ------------------------------------------------

    def on_second(self, power_w: int) -> list[str]:
        """Accumulate one second of load; commit NV iff the pulse count moved."""
        if self.config.window_unit is WindowUnit.MINUTE_OF_HOUR:
            position = self.rtc.minute_of_hour
        else:
            position = self.rtc.hour_of_day
        cls = classify(self.config.policy, position, power_w)
        before = self.register
        self.register = accumulate(self.register, power_w, cls)  # 1 s -> power_w joules
        if (self.register.ncu_pulses, self.register.ecu_pulses) != (
            before.ncu_pulses,
            before.ecu_pulses,
        ):
            self._commit_nv()
            return [COMMIT_NV]
        return []

    def _commit_nv(self) -> None:
        self.store.commit(
            self.register.ncu_pulses, self.register.ecu_pulses, self.config.digest()
        )

    # -- per-minute schedule ----------------------------------------------

    def on_minute(self, now_s: int) -> list[str]:
        """Minute boundary: send the hourly reading when the minute hand hits 2."""
        actions = []
        if (
            self.rtc.minute_of_hour == REPORT_MINUTE
            and self.last_report_hour_mark != self.rtc.hour_mark
        ):
            self._send_telegram(now_s)
            self.last_report_hour_mark = self.rtc.hour_mark
            actions.append(SEND_TELEGRAM)
        actions.append(LCD_UPDATE)
        return actions

    def _send_telegram(self, now_s: int) -> None:
        body = encode(
            from_counts(
                self.config.meter_id, self.register.ncu_pulses, self.register.ecu_pulses
            )
        )
        script = (
            b"AT\r\n",
            b"ATE0\r\n",
            b"AT+CMGF=1\r\n",
            f'AT+CMGS="{self.config.dest_number}"\r\n'.encode("ascii"),
            body + bytes([CTRL_Z]),
        )
        for chunk in script:
            _, submitted = self.session.feed(chunk, now_s=now_s)
            self.outbox.extend(submitted)

    def drain_outbox(self) -> list[SmsMessage]:
        messages, self.outbox = self.outbox, []
        return messages

    # -- keypad -----------------------------------------------------------

    def on_key(self, key: str) -> list[str]:
        """Feed one keypad event; returns COMMIT_NV when an edit was stored."""
        if self.mode == RUN:
            if key == "#":
                self.mode = PASSWORD_ENTRY
                self.input_buffer = ""
            return []
        if self.mode == PASSWORD_ENTRY:
            return self._key_in_password(key)
        if self.mode == MENU:
            return self._key_in_menu(key)
        return self._key_in_edit(key)

    def _buffer_digit(self, key: str) -> None:
        if key.isdigit() and len(self.input_buffer) < MAX_INPUT_DIGITS:
            self.input_buffer += key

    def _key_in_password(self, key: str) -> list[str]:
        if key == KEY_ENTER:
            matched = self.input_buffer == self.config.password
            self.input_buffer = ""
            if matched:
                self.mode = MENU
                self.menu_index = 0
        else:
            self._buffer_digit(key)
        return []

    def _key_in_menu(self, key: str) -> list[str]:
        if key == KEY_UP:
            self.menu_index = (self.menu_index - 1) % len(MENU_ITEMS)
        elif key == KEY_DOWN:
            self.menu_index = (self.menu_index + 1) % len(MENU_ITEMS)
        elif key == KEY_ENTER:
            field = MENU_ITEMS[self.menu_index][2]
            if field is None:  # Exit
                self.mode = RUN
                self.input_buffer = ""
            else:
                self.mode = EDIT_FIELD
                self.edit_field = field
                self.input_buffer = ""
        return []

    def _key_in_edit(self, key: str) -> list[str]:
        if key != KEY_ENTER:
            self._buffer_digit(key)
            return []
        value = self.input_buffer
        self.input_buffer = ""
        if self.edit_field == "meter_id" and _digits(value, 1, 8):
            self.config.meter_id = value
        elif self.edit_field == "dest_number" and _digits(value, 10, 12):
            self.config.dest_number = value
        elif self.edit_field == "load_limit_w" and _digits(value, 1, MAX_INPUT_DIGITS):
            self.config.load_limit_w = int(value)
        else:
            return []  # rejected: stay in EDIT_FIELD for another attempt
        self.mode = MENU
        self.edit_field = None
        self._commit_nv()
        return [COMMIT_NV]

    # -- display ------------------------------------------------------------

    def render_lcd(self) -> tuple[str, str]:
        """Current 2x16 screen contents, exact."""
        if self.mode == RUN:
            total = units_display(self.register.total_pulses)
            extra = units_display(self.register.ecu_pulses)
            rows = (f"ID:{self.config.meter_id}", f"TOT:{total} EX:{extra}")
        elif self.mode == PASSWORD_ENTRY:
            rows = ("PASSWORD:", "*" * len(self.input_buffer))
        elif self.mode == MENU:
            letter, label, _ = MENU_ITEMS[self.menu_index]
            rows = (f"MENU {letter}", label)
        else:
            label = next(item[1] for item in MENU_ITEMS if item[2] == self.edit_field)
            rows = (label, self.input_buffer)
        return tuple(row[:LCD_COLS].ljust(LCD_COLS) for row in rows)  # type: ignore[return-value]
