"""Energy metering math: load profiles to pulse counts and classified units.

All energy arithmetic is exact integer joules.  The metering front end
produces 3200 pulses per kWh, so one pulse corresponds to exactly
3,600,000 / 3200 = 1125 J and no floating point is needed anywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

PULSES_PER_UNIT = 3200
JOULES_PER_UNIT = 3_600_000
JOULES_PER_PULSE = JOULES_PER_UNIT // PULSES_PER_UNIT  # 1125 J, exact


class ConsumptionClass(enum.Enum):
    NORMAL = "normal"
    EXTRA = "extra"


class WindowUnit(enum.Enum):
    MINUTE_OF_HOUR = "minute_of_hour"
    HOUR_OF_DAY = "hour_of_day"

    @property
    def max_value(self) -> int:
        return 59 if self is WindowUnit.MINUTE_OF_HOUR else 23


@dataclass(frozen=True)
class LoadSample:
    """One step of a piecewise-constant load profile.

    Holds from ``start_s`` until the next sample.  Voltage rides along for
    reporting (current = P/V at the harness level) but never enters the
    energy math.
    """

    start_s: int
    power_w: int
    voltage_v: int

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValueError(f"start_s must be >= 0, got {self.start_s}")
        if self.power_w < 0:
            raise ValueError(f"power_w must be >= 0, got {self.power_w}")
        if self.voltage_v <= 0:
            raise ValueError(f"voltage_v must be > 0, got {self.voltage_v}")


@dataclass(frozen=True)
class PeakPolicy:
    """Peak window plus the permissible load above which energy is EXTRA."""

    unit: WindowUnit
    window_start: int
    window_end: int
    load_limit_w: int

    def __post_init__(self) -> None:
        hi = self.unit.max_value
        for name, value in (("window_start", self.window_start), ("window_end", self.window_end)):
            if not 0 <= value <= hi:
                raise ValueError(f"{name} must be in 0..{hi} for {self.unit.value}, got {value}")
        if self.window_start > self.window_end:
            raise ValueError(
                f"window_start {self.window_start} > window_end {self.window_end}"
            )
        if self.load_limit_w < 0:
            raise ValueError(f"load_limit_w must be >= 0, got {self.load_limit_w}")


@dataclass(frozen=True)
class EnergyRegister:
    """Pulse counters split by consumption class, with sub-pulse joule remainders."""

    ncu_pulses: int = 0
    ecu_pulses: int = 0
    ncu_remainder_j: int = 0
    ecu_remainder_j: int = 0

    def __post_init__(self) -> None:
        for name in ("ncu_pulses", "ecu_pulses", "ncu_remainder_j", "ecu_remainder_j"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("ncu_remainder_j", "ecu_remainder_j"):
            if getattr(self, name) >= JOULES_PER_PULSE:
                raise ValueError(f"{name} must be < {JOULES_PER_PULSE}")

    @property
    def total_pulses(self) -> int:
        return self.ncu_pulses + self.ecu_pulses

    @property
    def total_joules(self) -> int:
        """Exact lifetime energy, pulses plus unconverted remainders."""
        return (
            self.total_pulses * JOULES_PER_PULSE
            + self.ncu_remainder_j
            + self.ecu_remainder_j
        )


def joules_for_interval(sample: LoadSample, dt_s: int) -> int:
    """Energy drawn over ``dt_s`` seconds at the sample's power, exact."""
    if dt_s < 0:
        raise ValueError(f"dt_s must be >= 0, got {dt_s}")
    return sample.power_w * dt_s


def classify(policy: PeakPolicy, clock_position: int, power_w: int) -> ConsumptionClass:
    """EXTRA iff the clock sits inside the peak window AND power exceeds the limit."""
    if not 0 <= clock_position <= policy.unit.max_value:
        raise ValueError(
            f"clock_position {clock_position} out of range for {policy.unit.value}"
        )
    in_window = policy.window_start <= clock_position <= policy.window_end
    if in_window and power_w > policy.load_limit_w:
        return ConsumptionClass.EXTRA
    return ConsumptionClass.NORMAL


def accumulate(
    register: EnergyRegister, joules: int, cls: ConsumptionClass
) -> EnergyRegister:
    """Add energy to one class; full 1125 J quanta convert to pulses."""
    if joules < 0:
        raise ValueError(f"joules must be >= 0, got {joules}")
    if cls is ConsumptionClass.NORMAL:
        total = register.ncu_remainder_j + joules
        return EnergyRegister(
            ncu_pulses=register.ncu_pulses + total // JOULES_PER_PULSE,
            ecu_pulses=register.ecu_pulses,
            ncu_remainder_j=total % JOULES_PER_PULSE,
            ecu_remainder_j=register.ecu_remainder_j,
        )
    total = register.ecu_remainder_j + joules
    return EnergyRegister(
        ncu_pulses=register.ncu_pulses,
        ecu_pulses=register.ecu_pulses + total // JOULES_PER_PULSE,
        ncu_remainder_j=register.ncu_remainder_j,
        ecu_remainder_j=total % JOULES_PER_PULSE,
    )


def units_display(pulses: int) -> str:
    """Render a pulse count as units with two decimals, floor-truncated.

    At least two integer digits, zero padded; the integer part widens left
    when the reading outgrows the two-digit field.
    """
    if pulses < 0:
        raise ValueError(f"pulses must be >= 0, got {pulses}")
    hundredths = pulses * 100 // PULSES_PER_UNIT
    return f"{hundredths // 100:02d}.{hundredths % 100:02d}"
