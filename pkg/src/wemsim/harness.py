"""Deterministic event loop wiring meters, SMS channel, and head end.

Simulated time advances in 1-second steps.  Within each step the order is
fixed: every meter ticks its RTC, meters the previous second's load, and runs
its minute-boundary hooks; then the channel delivers due messages; then the
station ingests them.  Two runs of the same scenario produce byte-identical
reports.

State (NV logs + station tables) lives in one directory; reusing it across
runs simulates reboots, while the default fresh directory gives a clean
deterministic run.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field

from .firmware import SEND_TELEGRAM, Firmware
from .metering import PULSES_PER_UNIT, units_display
from .modem import AtSession, SmsChannel
from .nvstore import NvStore
from .rtc import Rtc
from .scenario import MeterSpec, Scenario
from .station import DuplicateMeterError, Station

EVENT_BOOT = "BOOT"
EVENT_REGISTER = "REGISTER"
EVENT_SEND = "SEND"
EVENT_DROP = "DROP"
EVENT_DELIVER = "DELIVER"
EVENT_INGEST = "INGEST"
EVENT_REJECT = "REJECT"

SERIES_INTERVAL_S = 60


@dataclass
class MeterRuntime:
    """One meter's live pieces plus its per-run counters."""

    spec: MeterSpec
    firmware: Firmware
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    nv_commits: int = 0
    load_override: int | None = None
    series: list[tuple[int, int, int]] = field(default_factory=list)  # (t, ncu, ecu)

    @property
    def meter_id(self) -> str:
        return self.firmware.config.meter_id

    def power_at(self, t_s: int) -> int:
        if self.load_override is not None:
            return self.load_override
        return self.spec.power_at(t_s)


@dataclass
class RunReport:
    duration_s: int
    seed: int
    meters: dict[str, dict]
    channel: dict
    station: dict
    events: list[str]
    series: dict[str, list[tuple[int, int, int]]]

    def to_json(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "seed": self.seed,
            "meters": self.meters,
            "channel": self.channel,
            "station": self.station,
            "events": self.events,
            "series": {k: [list(p) for p in v] for k, v in self.series.items()},
        }


def _event(events: list[str], t: int, meter: str, kind: str, detail: str) -> None:
    events.append(f"t={t} meter={meter} kind={kind} detail={detail}")


class Engine:
    """Shared stepping core for batch runs and the live server."""

    def __init__(self, scenario: Scenario, state_dir: str) -> None:
        self.scenario = scenario
        self.state_dir = state_dir
        self.now_s = 0
        self.events: list[str] = []
        self.channel = SmsChannel(scenario.channel)
        self.station = Station(data_dir=state_dir, tariff=scenario.tariff)
        self.meters: list[MeterRuntime] = []
        self.by_number: dict[str, MeterRuntime] = {}
        for spec in scenario.meters:
            runtime = self._start_meter(spec)
            self.meters.append(runtime)
            self.by_number[runtime.firmware.session.own_number] = runtime

    def _start_meter(self, spec: MeterSpec) -> MeterRuntime:
        config = dataclasses.replace(spec.config)  # runs must not mutate the scenario
        store = NvStore(
            os.path.join(self.state_dir, f"meter_{config.meter_id}.nvlog"), sync=False
        )
        firmware = Firmware(
            config=config,
            rtc=Rtc(),
            store=store,
            session=AtSession(own_number=config.meter_id),
        )
        firmware.boot()
        record = store.recover()
        _event(
            self.events,
            0,
            config.meter_id,
            EVENT_BOOT,
            f"seq={record.seq} ncu={record.ncu_pulses} ecu={record.ecu_pulses}",
        )
        try:
            self.station.register_meter(config.meter_id, config.dest_number)
            _event(self.events, 0, config.meter_id, EVENT_REGISTER, f"dest={config.dest_number}")
        except DuplicateMeterError:
            pass  # rebooted into an existing state directory
        return MeterRuntime(spec=spec, firmware=firmware)

    def step(self) -> None:
        """Advance simulated time by one second."""
        self.now_s += 1
        t = self.now_s
        for m in self.meters:
            fw = m.firmware
            fw.rtc.tick(1)
            if fw.on_second(m.power_at(t - 1)):
                m.nv_commits += 1
            if fw.rtc.cycle_s % 60 == 0:
                fw.on_minute(t)
            for message in fw.drain_outbox():
                m.sent += 1
                body = message.body.decode("latin-1")
                _event(self.events, t, m.meter_id, EVENT_SEND, f"body={body}")
                dropped_before = len(self.channel.dropped)
                self.channel.submit(message)
                if len(self.channel.dropped) > dropped_before:
                    m.dropped += 1
                    _event(self.events, t, m.meter_id, EVENT_DROP, f"body={body}")
            if t % SERIES_INTERVAL_S == 0 or t == self.scenario.duration_s:
                m.series.append((t, fw.register.ncu_pulses, fw.register.ecu_pulses))
        for message in self.channel.step(t):
            runtime = self.by_number.get(message.from_number)
            meter_label = runtime.meter_id if runtime else message.from_number
            if runtime:
                runtime.delivered += 1
            body = message.body.decode("latin-1")
            _event(self.events, t, meter_label, EVENT_DELIVER, f"body={body}")
            result = self.station.ingest(message.from_number, message.body, received_at_s=t)
            if result.status == "rejected":
                _event(
                    self.events,
                    t,
                    meter_label,
                    EVENT_REJECT,
                    f"category={result.rejection.category}",
                )
            else:
                _event(
                    self.events,
                    t,
                    meter_label,
                    EVENT_INGEST,
                    f"status={result.status} ncu={result.record.ncu_units} "
                    f"ecu={result.record.ecu_units}",
                )

    def report(self) -> RunReport:
        meters = {}
        rejections: dict[str, int] = {}
        for rejection in self.station.dead_letters():
            rejections[rejection.category] = rejections.get(rejection.category, 0) + 1
        readings_total = 0
        for m in self.meters:
            register = m.firmware.register
            stored = len(self.station.readings(m.meter_id))
            readings_total += stored
            meters[m.meter_id] = {
                "ncu_pulses": register.ncu_pulses,
                "ecu_pulses": register.ecu_pulses,
                "total_pulses": register.total_pulses,
                "ncu_units": units_display(register.ncu_pulses),
                "ecu_units": units_display(register.ecu_pulses),
                "total_units": units_display(register.total_pulses),
                "sent": m.sent,
                "delivered": m.delivered,
                "dropped": m.dropped,
                "nv_commits": m.nv_commits,
                "readings_stored": stored,
                "final_lcd": list(m.firmware.render_lcd()),
            }
        return RunReport(
            duration_s=self.scenario.duration_s,
            seed=self.scenario.seed,
            meters=meters,
            channel={
                "submitted": len(self.channel.submitted),
                "delivered": len(self.channel.delivered),
                "dropped": len(self.channel.dropped),
            },
            station={
                "readings": readings_total,
                "dead_letters": len(self.station.dead_letters()),
                "rejections_by_category": dict(sorted(rejections.items())),
            },
            events=list(self.events),
            series={m.meter_id: list(m.series) for m in self.meters},
        )


def run(scenario: Scenario, state_dir: str | None = None) -> RunReport:
    """Run a scenario to completion; fresh state unless state_dir is given."""
    if state_dir is None:
        with tempfile.TemporaryDirectory(prefix="wemsim-") as tmp:
            return _run_in(scenario, tmp)
    os.makedirs(state_dir, exist_ok=True)
    return _run_in(scenario, state_dir)


def _run_in(scenario: Scenario, state_dir: str) -> RunReport:
    engine = Engine(scenario, state_dir)
    for _ in range(scenario.duration_s):
        engine.step()
    return engine.report()


class LiveRunner:
    """Steps a scenario in scaled real time for the operator console.

    ``scale`` is simulated seconds per wall second (default 60: one simulated
    minute per real second).  Keypad events and load overrides arrive from
    API threads, are queued under the lock, and take effect at step
    boundaries, so the core loop stays deterministic for a given input
    sequence.
    """

    def __init__(self, scenario: Scenario, state_dir: str, scale: int = 60) -> None:
        if scale < 1:
            raise ValueError("scale must be >= 1")
        self.engine = Engine(scenario, state_dir)
        self.scale = scale
        self._lock = threading.Lock()
        self._key_queues: dict[str, list[str]] = {}
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def station(self) -> Station:
        return self.engine.station

    @property
    def now_s(self) -> int:
        with self._lock:
            return self.engine.now_s

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _loop(self) -> None:
        pace = 1.0 / self.scale
        while not self._stop.is_set():
            started = time.monotonic()
            with self._lock:
                if self.engine.now_s >= self.engine.scenario.duration_s:
                    break  # scenario exhausted; keep serving snapshots
                self._apply_queued_keys()
                self.engine.step()
            elapsed = time.monotonic() - started
            if elapsed < pace:
                time.sleep(pace - elapsed)

    def _apply_queued_keys(self) -> None:
        for meter_id, keys in self._key_queues.items():
            runtime = self._runtime(meter_id)
            if runtime is not None:
                for key in keys:
                    runtime.firmware.on_key(key)
        self._key_queues.clear()

    def _runtime(self, meter_id: str) -> MeterRuntime | None:
        for m in self.engine.meters:
            if m.meter_id == meter_id:
                return m
        return None

    # -- API surface used by httpapi --------------------------------------

    def panel(self, meter_id: str) -> dict | None:
        with self._lock:
            runtime = self._runtime(meter_id)
            if runtime is None:
                return None
            fw = runtime.firmware
            register = fw.register
            yy, mo, dd, hh, mm, ss = fw.rtc.datetime_tuple()
            return {
                "meter_id": meter_id,
                "time_s": self.engine.now_s,
                "clock": f"{hh:02d}:{mm:02d}:{ss:02d}",
                "mode": fw.mode,
                "lcd": list(fw.render_lcd()),
                "register": {
                    "ncu_pulses": register.ncu_pulses,
                    "ecu_pulses": register.ecu_pulses,
                    "ncu_units": units_display(register.ncu_pulses),
                    "ecu_units": units_display(register.ecu_pulses),
                    "total_units": units_display(register.total_pulses),
                },
                "config": {
                    "dest_number": fw.config.dest_number,
                    "load_limit_w": fw.config.load_limit_w,
                    "window_unit": fw.config.window_unit.value,
                    "window_start": fw.config.window_start,
                    "window_end": fw.config.window_end,
                },
                "load_w": runtime.power_at(max(self.engine.now_s - 1, 0)),
                "telegrams_sent": runtime.sent,
            }

    def queue_keys(self, meter_id: str, keys: list[str]) -> bool:
        with self._lock:
            if self._runtime(meter_id) is None:
                return False
            self._key_queues.setdefault(meter_id, []).extend(keys)
            return True

    def set_load(self, meter_id: str, power_w: int) -> bool:
        with self._lock:
            runtime = self._runtime(meter_id)
            if runtime is None:
                return False
            runtime.load_override = power_w
            return True
