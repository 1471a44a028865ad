"""Render a finished run into files: JSON, event log, CSV, and PNG charts.

Text artifacts (report.json, events.log, summary.csv) are byte-identical
across repeated runs of the same scenario; the PNGs are best-effort visual
companions and are not part of the determinism contract.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")  # file output only; no display needed

import matplotlib.pyplot as plt

from .harness import RunReport
from .metering import PULSES_PER_UNIT
from .scenario import Scenario

REPORT_JSON = "report.json"
EVENTS_LOG = "events.log"
SUMMARY_CSV = "summary.csv"
CONSUMPTION_PNG = "consumption.png"
LOAD_PNG = "load.png"

SUMMARY_FIELDS = [
    "meter_id",
    "total_units",
    "ncu_units",
    "ecu_units",
    "total_pulses",
    "telegrams_sent",
    "telegrams_delivered",
    "telegrams_dropped",
    "readings_stored",
    "nv_commits",
]


def write_report(report: RunReport, out_dir: str, scenario: Scenario | None = None) -> list[str]:
    """Write all artifacts into out_dir; returns the file names written."""
    os.makedirs(out_dir, exist_ok=True)
    written = [
        _write_json(report, out_dir),
        _write_events(report, out_dir),
        _write_summary(report, out_dir),
        _write_consumption_png(report, out_dir),
    ]
    if scenario is not None:
        written.append(_write_load_png(scenario, out_dir))
    return written


def _write_json(report: RunReport, out_dir: str) -> str:
    path = os.path.join(out_dir, REPORT_JSON)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_json(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return REPORT_JSON


def _write_events(report: RunReport, out_dir: str) -> str:
    path = os.path.join(out_dir, EVENTS_LOG)
    with open(path, "w", encoding="utf-8") as handle:
        for line in report.events:
            handle.write(line + "\n")
    return EVENTS_LOG


def _write_summary(report: RunReport, out_dir: str) -> str:
    path = os.path.join(out_dir, SUMMARY_CSV)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_FIELDS)
        for meter_id in sorted(report.meters):
            row = report.meters[meter_id]
            writer.writerow(
                [
                    meter_id,
                    row["total_units"],
                    row["ncu_units"],
                    row["ecu_units"],
                    row["total_pulses"],
                    row["sent"],
                    row["delivered"],
                    row["dropped"],
                    row["readings_stored"],
                    row["nv_commits"],
                ]
            )
    return SUMMARY_CSV


def _write_consumption_png(report: RunReport, out_dir: str) -> str:
    """Cumulative energy per meter: total solid, peak-window share dashed."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for meter_id in sorted(report.series):
        points = report.series[meter_id]
        hours = [t / 3600 for t, _, _ in points]
        total = [(ncu + ecu) / PULSES_PER_UNIT for _, ncu, ecu in points]
        extra = [ecu / PULSES_PER_UNIT for _, _, ecu in points]
        (line,) = ax.plot(hours, total, label=f"{meter_id} total")
        ax.plot(hours, extra, linestyle="--", color=line.get_color(), label=f"{meter_id} extra")
    ax.set_xlabel("simulated hours")
    ax.set_ylabel("energy units (kWh)")
    ax.set_title("Cumulative consumption")
    if report.series:
        ax.legend(loc="upper left", fontsize="small")
    ax.grid(True, alpha=0.3)
    path = os.path.join(out_dir, CONSUMPTION_PNG)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return CONSUMPTION_PNG


def _write_load_png(scenario: Scenario, out_dir: str) -> str:
    """Configured load profile per meter as a step plot."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    horizon_h = scenario.duration_s / 3600
    for spec in scenario.meters:
        times = [s.start_s / 3600 for s in spec.profile]
        powers = [s.power_w for s in spec.profile]
        times.append(horizon_h)
        powers.append(powers[-1] if powers else 0)
        ax.step(times, powers, where="post", label=spec.config.meter_id)
    ax.set_xlabel("simulated hours")
    ax.set_ylabel("load (W)")
    ax.set_title("Load profile")
    if scenario.meters:
        ax.legend(loc="upper right", fontsize="small")
    ax.grid(True, alpha=0.3)
    path = os.path.join(out_dir, LOAD_PNG)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return LOAD_PNG
