"""Head-end service: meter registry, reading history, billing, dead letters.

Telegrams arrive as SMS bodies; each one either becomes a ReadingRecord or a
categorized rejection in the dead-letter log.  Meters report lifetime totals,
so bills are computed from differences between the cumulative readings that
bound the requested period.

All money is held as integer hundredths and rounded half-up only when a
charge is computed, so bill identities hold exactly.  Persistence is one
append-only newline-delimited JSON file per table, loaded fully at startup.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass

from .telegram import TelegramError, Telegram, decode, encode

# Rejection categories
PARSE = "PARSE"
UNKNOWN_METER = "UNKNOWN_METER"
STALE = "STALE"

METERS_FILE = "meters.ndjson"
READINGS_FILE = "readings.ndjson"
DEADLETTER_FILE = "deadletter.ndjson"
TARIFF_FILE = "tariff.json"


class StationError(Exception):
    pass


class UnknownMeterError(StationError):
    pass


class DuplicateMeterError(StationError):
    pass


class NoReadingsError(StationError):
    pass


# -- money ---------------------------------------------------------------


def parse_money(text: str) -> int:
    """Decimal string to integer hundredths; at most two fraction digits."""
    text = str(text)
    whole, dot, frac = text.partition(".")
    if not whole.isascii() or not whole.isdigit():
        raise ValueError(f"bad money value: {text!r}")
    if dot and not (frac.isascii() and frac.isdigit() and len(frac) <= 2):
        raise ValueError(f"bad money value: {text!r}")
    return int(whole) * 100 + (int(frac.ljust(2, "0")) if dot else 0)


def format_money(hundredths: int) -> str:
    sign = "-" if hundredths < 0 else ""
    hundredths = abs(hundredths)
    return f"{sign}{hundredths // 100}.{hundredths % 100:02d}"


def charge(rate_hundredths: int, units_hundredths: int) -> int:
    """rate x units, both 2-decimal fixed point, rounded half-up to hundredths."""
    return (rate_hundredths * units_hundredths + 50) // 100


def display_to_hundredths(display: str) -> int:
    whole, _, frac = display.partition(".")
    return int(whole) * 100 + int(frac)


# -- domain types ----------------------------------------------------------


@dataclass(frozen=True)
class TariffSchedule:
    """Operator-configured rates, in hundredths of currency per unit."""

    normal_rate_c: int = 300
    peak_rate_c: int = 500
    fixed_charge_c: int = 0

    def __post_init__(self) -> None:
        for name in ("normal_rate_c", "peak_rate_c", "fixed_charge_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.peak_rate_c < self.normal_rate_c:
            raise ValueError("peak_rate must be >= normal_rate")

    def to_json(self) -> dict:
        return {
            "normal_rate": format_money(self.normal_rate_c),
            "peak_rate": format_money(self.peak_rate_c),
            "fixed_charge": format_money(self.fixed_charge_c),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TariffSchedule":
        return cls(
            normal_rate_c=parse_money(obj["normal_rate"]),
            peak_rate_c=parse_money(obj["peak_rate"]),
            fixed_charge_c=parse_money(obj["fixed_charge"]),
        )


@dataclass(frozen=True)
class Meter:
    meter_id: str
    dest_number: str

    def to_json(self) -> dict:
        return {"meter_id": self.meter_id, "dest_number": self.dest_number}


@dataclass(frozen=True)
class ReadingRecord:
    """One accepted telegram: cumulative displays plus the original bytes."""

    meter_id: str
    received_at_s: int
    ncu_units: str
    ecu_units: str
    raw: str

    @property
    def ncu_hundredths(self) -> int:
        return display_to_hundredths(self.ncu_units)

    @property
    def ecu_hundredths(self) -> int:
        return display_to_hundredths(self.ecu_units)

    def to_json(self) -> dict:
        return {
            "meter_id": self.meter_id,
            "received_at_s": self.received_at_s,
            "ncu_units": self.ncu_units,
            "ecu_units": self.ecu_units,
            "raw": self.raw,
        }


@dataclass(frozen=True)
class Rejection:
    category: str
    detail: str
    from_number: str
    raw: str
    received_at_s: int

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "detail": self.detail,
            "from_number": self.from_number,
            "raw": self.raw,
            "received_at_s": self.received_at_s,
        }


@dataclass(frozen=True)
class IngestResult:
    status: str  # "stored" | "duplicate" | "rejected"
    record: ReadingRecord | None = None
    rejection: Rejection | None = None

    @property
    def accepted(self) -> bool:
        return self.status in ("stored", "duplicate")


@dataclass(frozen=True)
class Bill:
    meter_id: str
    period_start_s: int
    period_end_s: int
    start_reading_at_s: int | None  # None: zero baseline before first reading
    end_reading_at_s: int
    ncu_consumed_c: int
    ecu_consumed_c: int
    amount_without_extra_c: int
    amount_total_c: int

    def to_json(self) -> dict:
        return {
            "meter_id": self.meter_id,
            "period_start_s": self.period_start_s,
            "period_end_s": self.period_end_s,
            "start_reading_at_s": self.start_reading_at_s,
            "end_reading_at_s": self.end_reading_at_s,
            "ncu_consumed": format_money(self.ncu_consumed_c),
            "ecu_consumed": format_money(self.ecu_consumed_c),
            "amount_without_extra": format_money(self.amount_without_extra_c),
            "amount_total": format_money(self.amount_total_c),
        }


def _digits(text: str, lo: int, hi: int) -> bool:
    return lo <= len(text) <= hi and all(c in "0123456789" for c in text)


class Station:
    """The control-station state machine behind the HTTP API.

    Thread-safe: one re-entrant lock serializes all mutations; readers take
    the same lock, so every caller sees a consistent snapshot.  Pass
    ``data_dir=None`` for an ephemeral in-memory station.
    """

    def __init__(self, data_dir: str | None = None, tariff: TariffSchedule | None = None) -> None:
        self._lock = threading.RLock()
        self.data_dir = data_dir
        self._meters: dict[str, Meter] = {}
        self._readings: dict[str, list[ReadingRecord]] = {}
        self._dead: list[Rejection] = []
        self._seen: set[tuple[str, str, int]] = set()
        self._by_key: dict[tuple[str, str, int], ReadingRecord] = {}
        self._tariff = tariff or TariffSchedule()
        if data_dir is not None:
            os.makedirs(data_dir, exist_ok=True)
            self._load()

    # -- persistence -----------------------------------------------------

    def _load(self) -> None:
        for row in self._read_table(METERS_FILE):
            meter = Meter(row["meter_id"], row["dest_number"])
            self._meters[meter.meter_id] = meter
            self._readings.setdefault(meter.meter_id, [])
        for row in self._read_table(READINGS_FILE):
            record = ReadingRecord(
                meter_id=row["meter_id"],
                received_at_s=row["received_at_s"],
                ncu_units=row["ncu_units"],
                ecu_units=row["ecu_units"],
                raw=row["raw"],
            )
            self._remember(record)
        for row in self._read_table(DEADLETTER_FILE):
            self._dead.append(Rejection(**row))
        tariff_path = os.path.join(self.data_dir, TARIFF_FILE)
        if os.path.exists(tariff_path):
            with open(tariff_path, encoding="utf-8") as fh:
                self._tariff = TariffSchedule.from_json(json.load(fh))

    def _read_table(self, name: str) -> list[dict]:
        path = os.path.join(self.data_dir, name)
        if not os.path.exists(path):
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def _append(self, name: str, obj: dict) -> None:
        if self.data_dir is None:
            return
        with open(os.path.join(self.data_dir, name), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(obj) + "\n")

    def _remember(self, record: ReadingRecord) -> None:
        self._readings.setdefault(record.meter_id, []).append(record)
        key = (record.meter_id, record.raw, record.received_at_s)
        self._seen.add(key)
        self._by_key[key] = record

    # -- registry ----------------------------------------------------------

    def register_meter(self, meter_id: str, dest_number: str) -> Meter:
        with self._lock:
            if not _digits(meter_id, 1, 8):
                raise ValueError(f"meter_id must be 1-8 digits: {meter_id!r}")
            if not _digits(dest_number, 10, 12):
                raise ValueError(f"dest_number must be 10-12 digits: {dest_number!r}")
            if meter_id in self._meters:
                raise DuplicateMeterError(f"meter {meter_id} already registered")
            meter = Meter(meter_id, dest_number)
            self._meters[meter_id] = meter
            self._readings.setdefault(meter_id, [])
            self._append(METERS_FILE, meter.to_json())
            return meter

    def get_meter(self, meter_id: str) -> Meter | None:
        with self._lock:
            return self._meters.get(meter_id)

    def list_meters(self) -> list[Meter]:
        with self._lock:
            return [self._meters[k] for k in sorted(self._meters)]

    # -- ingestion ---------------------------------------------------------

    def ingest(self, from_number: str, body: bytes | str, received_at_s: int) -> IngestResult:
        """Decode and store one telegram, or reject it into the dead-letter log."""
        body_text = body.decode("latin-1") if isinstance(body, bytes) else body
        with self._lock:
            try:
                telegram = decode(body)
            except TelegramError as err:
                return self._reject(PARSE, str(err), from_number, body_text, received_at_s)
            if telegram.meter_id not in self._meters:
                return self._reject(
                    UNKNOWN_METER,
                    f"meter {telegram.meter_id} not registered",
                    from_number,
                    body_text,
                    received_at_s,
                )
            key = (telegram.meter_id, body_text, received_at_s)
            if key in self._seen:
                return IngestResult(status="duplicate", record=self._by_key[key])
            history = self._readings[telegram.meter_id]
            if history:
                last = history[-1]
                if (
                    display_to_hundredths(telegram.ncu_display) < last.ncu_hundredths
                    or display_to_hundredths(telegram.ecu_display) < last.ecu_hundredths
                ):
                    return self._reject(
                        STALE,
                        f"cumulative reading below stored {last.ncu_units}/{last.ecu_units}",
                        from_number,
                        body_text,
                        received_at_s,
                    )
            record = ReadingRecord(
                meter_id=telegram.meter_id,
                received_at_s=received_at_s,
                ncu_units=telegram.ncu_display,
                ecu_units=telegram.ecu_display,
                raw=body_text,
            )
            self._remember(record)
            self._append(READINGS_FILE, record.to_json())
            return IngestResult(status="stored", record=record)

    def _reject(
        self, category: str, detail: str, from_number: str, raw: str, received_at_s: int
    ) -> IngestResult:
        rejection = Rejection(category, detail, from_number, raw, received_at_s)
        self._dead.append(rejection)
        self._append(DEADLETTER_FILE, rejection.to_json())
        return IngestResult(status="rejected", rejection=rejection)

    # -- queries -------------------------------------------------------------

    def readings(
        self, meter_id: str, from_s: int | None = None, to_s: int | None = None
    ) -> list[ReadingRecord]:
        with self._lock:
            if meter_id not in self._meters:
                raise UnknownMeterError(f"meter {meter_id} not registered")
            rows = self._readings[meter_id]
            if from_s is not None:
                rows = [r for r in rows if r.received_at_s >= from_s]
            if to_s is not None:
                rows = [r for r in rows if r.received_at_s <= to_s]
            return list(rows)

    def dead_letters(self) -> list[Rejection]:
        with self._lock:
            return list(self._dead)

    # -- billing -------------------------------------------------------------

    def compute_bill(self, meter_id: str, from_s: int = 0, to_s: int | None = None) -> Bill:
        """Bill the consumption between the readings bounding [from_s, to_s].

        The opening reading is the latest one at or before from_s (zero
        baseline if none); the closing reading is the latest one at or
        before to_s (default: the meter's newest reading).
        """
        with self._lock:
            if meter_id not in self._meters:
                raise UnknownMeterError(f"meter {meter_id} not registered")
            history = self._readings[meter_id]
            if to_s is None:
                if not history:
                    raise NoReadingsError(f"meter {meter_id} has no readings")
                to_s = history[-1].received_at_s
            if from_s > to_s:
                raise ValueError(f"period start {from_s} after end {to_s}")
            end = self._latest_at_or_before(history, to_s)
            if end is None:
                raise NoReadingsError(
                    f"meter {meter_id} has no readings at or before t={to_s}"
                )
            start = self._latest_at_or_before(history, from_s)
            start_ncu = start.ncu_hundredths if start else 0
            start_ecu = start.ecu_hundredths if start else 0
            ncu_consumed = end.ncu_hundredths - start_ncu
            ecu_consumed = end.ecu_hundredths - start_ecu
            tariff = self._tariff
            without_extra = tariff.fixed_charge_c + charge(tariff.normal_rate_c, ncu_consumed)
            total = without_extra + charge(tariff.peak_rate_c, ecu_consumed)
            return Bill(
                meter_id=meter_id,
                period_start_s=from_s,
                period_end_s=to_s,
                start_reading_at_s=start.received_at_s if start else None,
                end_reading_at_s=end.received_at_s,
                ncu_consumed_c=ncu_consumed,
                ecu_consumed_c=ecu_consumed,
                amount_without_extra_c=without_extra,
                amount_total_c=total,
            )

    @staticmethod
    def _latest_at_or_before(
        history: list[ReadingRecord], at_s: int
    ) -> ReadingRecord | None:
        best = None
        for record in history:
            if record.received_at_s <= at_s:
                best = record
        return best

    # -- tariff ---------------------------------------------------------------

    @property
    def tariff(self) -> TariffSchedule:
        with self._lock:
            return self._tariff

    def set_tariff(self, tariff: TariffSchedule) -> None:
        with self._lock:
            self._tariff = tariff
            if self.data_dir is not None:
                path = os.path.join(self.data_dir, TARIFF_FILE)
                with open(path, "w", encoding="utf-8") as fh:
                    json.dump(tariff.to_json(), fh)


def reading_reencodes(record: ReadingRecord) -> bool:
    """Stored readings always re-encode to their original wire bytes."""
    rebuilt = encode(Telegram(record.meter_id, record.ncu_units, record.ecu_units))
    return rebuilt == record.raw.encode("latin-1")
