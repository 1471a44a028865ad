"""Scenario files: what to simulate, as plain human-editable JSON.

Schema (defaults in parentheses):

    {
      "duration_s": 14400,
      "seed": 42,                         (0)
      "clock_profile": "demo",            ("demo" | "production")
      "channel": {"latency_s": 0, "drop_probability": 0.0},
      "tariff": {"normal_rate": "3.00", "peak_rate": "5.00", "fixed_charge": "0.00"},
      "meters": [
        {
          "meter_id": "12345",
          "dest_number": "919876543210",
          "load_limit_w": 500,
          "password": "1234",             ("1234")
          "window": {"start": 5, "end": 8},     (from clock_profile)
          "profile": [
            {"start_s": 0, "power_w": 1000, "voltage_v": 230}
          ]
        }
      ]
    }

The demo clock profile classifies peaks by minute-of-hour (window 5-8 by
default); the production profile uses hour-of-day (window 18-22 by default).
Each profile entry holds from its start until the next entry.  Validation
reports every problem at once, not just the first.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass

from .firmware import MeterConfig
from .metering import LoadSample, WindowUnit
from .modem import ChannelConfig
from .station import TariffSchedule

CLOCK_PROFILES = {
    "demo": (WindowUnit.MINUTE_OF_HOUR, 5, 8),
    "production": (WindowUnit.HOUR_OF_DAY, 18, 22),
}


class ScenarioError(ValueError):
    """Scenario validation failure carrying the full problem list."""

    def __init__(self, problems: list[str]) -> None:
        super().__init__("\n".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class MeterSpec:
    config: MeterConfig
    profile: tuple[LoadSample, ...]

    def sample_at(self, t_s: int) -> LoadSample:
        """The profile entry in force at simulated second t_s (0 W before the first)."""
        starts = [s.start_s for s in self.profile]
        i = bisect.bisect_right(starts, t_s) - 1
        if i < 0:
            return LoadSample(start_s=0, power_w=0, voltage_v=230)
        return self.profile[i]

    def power_at(self, t_s: int) -> int:
        return self.sample_at(t_s).power_w


@dataclass(frozen=True)
class Scenario:
    duration_s: int
    seed: int
    clock_profile: str
    channel: ChannelConfig
    tariff: TariffSchedule
    meters: tuple[MeterSpec, ...]


def _check_keys(obj: dict, allowed: set[str], where: str, problems: list[str]) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        problems.append(f"{where}: unknown keys {unknown}")


def _get_int(obj: dict, key: str, where: str, problems: list[str], default=None):
    value = obj.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        problems.append(f"{where}: {key} must be an integer, got {value!r}")
        return default
    return value


def parse_scenario(obj: dict) -> Scenario:
    """Validate and build a scenario; raises ScenarioError listing every problem."""
    problems: list[str] = []
    if not isinstance(obj, dict):
        raise ScenarioError(["scenario must be a JSON object"])
    _check_keys(
        obj,
        {"duration_s", "seed", "clock_profile", "channel", "tariff", "meters"},
        "scenario",
        problems,
    )

    duration_s = _get_int(obj, "duration_s", "scenario", problems, default=0) or 0
    if duration_s <= 0:
        problems.append(f"scenario: duration_s must be > 0, got {duration_s}")
    seed = _get_int(obj, "seed", "scenario", problems, default=0) or 0

    profile_name = obj.get("clock_profile", "demo")
    if profile_name not in CLOCK_PROFILES:
        problems.append(
            f"scenario: clock_profile must be one of {sorted(CLOCK_PROFILES)}, got {profile_name!r}"
        )
        profile_name = "demo"
    window_unit, default_start, default_end = CLOCK_PROFILES[profile_name]

    channel_obj = obj.get("channel", {})
    channel = ChannelConfig(seed=seed)
    if not isinstance(channel_obj, dict):
        problems.append("channel: must be an object")
    else:
        _check_keys(channel_obj, {"latency_s", "drop_probability"}, "channel", problems)
        try:
            channel = ChannelConfig(
                latency_s=channel_obj.get("latency_s", 0),
                drop_probability=channel_obj.get("drop_probability", 0.0),
                seed=seed,
            )
        except (TypeError, ValueError) as err:
            problems.append(f"channel: {err}")

    tariff = TariffSchedule()
    tariff_obj = obj.get("tariff")
    if tariff_obj is not None:
        try:
            tariff = TariffSchedule.from_json(tariff_obj)
        except (TypeError, KeyError, ValueError) as err:
            problems.append(f"tariff: invalid ({err!r})")

    meters_obj = obj.get("meters", [])
    if not isinstance(meters_obj, list):
        problems.append("meters: must be a list")
        meters_obj = []
    meters = []
    seen_ids: dict[str, int] = {}
    for index, meter_obj in enumerate(meters_obj):
        where = f"meters[{index}]"
        if not isinstance(meter_obj, dict):
            problems.append(f"{where}: must be an object")
            continue
        _check_keys(
            meter_obj,
            {"meter_id", "dest_number", "load_limit_w", "password", "window", "profile"},
            where,
            problems,
        )
        meter_id = meter_obj.get("meter_id")
        if meter_id is not None:
            key = str(meter_id)
            if key in seen_ids:
                problems.append(
                    f"{where}: duplicate meter_id {key!r} "
                    f"(also declared at meters[{seen_ids[key]}])"
                )
            else:
                seen_ids[key] = index

        window_obj = meter_obj.get("window", {})
        window_start, window_end = default_start, default_end
        if not isinstance(window_obj, dict):
            problems.append(f"{where}.window: must be an object")
        else:
            _check_keys(window_obj, {"start", "end"}, f"{where}.window", problems)
            window_start = _get_int(window_obj, "start", f"{where}.window", problems, default_start)
            window_end = _get_int(window_obj, "end", f"{where}.window", problems, default_end)

        load_limit_w = _get_int(meter_obj, "load_limit_w", where, problems, default=500)
        try:
            config = MeterConfig(
                meter_id=str(meter_obj.get("meter_id", "")),
                dest_number=str(meter_obj.get("dest_number", "")),
                load_limit_w=load_limit_w if load_limit_w is not None else 500,
                password=str(meter_obj.get("password", "1234")),
                window_unit=window_unit,
                window_start=window_start,
                window_end=window_end,
            )
        except (TypeError, ValueError) as err:
            problems.append(f"{where}: {err}")
            continue

        profile = _parse_profile(meter_obj.get("profile", []), where, problems)
        meters.append(MeterSpec(config=config, profile=profile))

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        duration_s=duration_s,
        seed=seed,
        clock_profile=profile_name,
        channel=channel,
        tariff=tariff,
        meters=tuple(meters),
    )


def _parse_profile(entries, where: str, problems: list[str]) -> tuple[LoadSample, ...]:
    if not isinstance(entries, list):
        problems.append(f"{where}.profile: must be a list")
        return ()
    samples = []
    last_start = -1
    for j, entry in enumerate(entries):
        here = f"{where}.profile[{j}]"
        if not isinstance(entry, dict):
            problems.append(f"{here}: must be an object")
            continue
        _check_keys(entry, {"start_s", "power_w", "voltage_v"}, here, problems)
        start_s = _get_int(entry, "start_s", here, problems, default=0) or 0
        power_w = _get_int(entry, "power_w", here, problems, default=0) or 0
        voltage_v = _get_int(entry, "voltage_v", here, problems, default=230) or 230
        try:
            sample = LoadSample(start_s=start_s, power_w=power_w, voltage_v=voltage_v)
        except ValueError as err:
            problems.append(f"{here}: {err}")
            continue
        if sample.start_s <= last_start:
            problems.append(
                f"{here}: start_s {sample.start_s} not after previous {last_start}"
            )
        last_start = sample.start_s
        samples.append(sample)
    return tuple(samples)


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as err:
        raise ScenarioError([f"cannot read scenario: {err}"]) from None
    except json.JSONDecodeError as err:
        raise ScenarioError([f"scenario is not valid JSON: {err}"]) from None
    return parse_scenario(obj)
