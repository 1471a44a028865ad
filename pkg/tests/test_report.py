"""Report artifacts: presence, parseability, and text determinism."""

import csv
import json
import os

from wemsim.harness import run
from wemsim.report import write_report
from wemsim.scenario import parse_scenario


def small_scenario():
    return parse_scenario(
        {
            "duration_s": 600,
            "seed": 3,
            "meters": [
                {
                    "meter_id": "7",
                    "dest_number": "9194545400",
                    "profile": [{"start_s": 0, "power_w": 450}],
                },
                {
                    "meter_id": "8",
                    "dest_number": "9194545400",
                    "profile": [{"start_s": 0, "power_w": 900}, {"start_s": 300, "power_w": 0}],
                },
            ],
        }
    )


def test_all_artifacts_written(tmp_path) -> None:
    scenario = small_scenario()
    report = run(scenario)
    written = write_report(report, str(tmp_path), scenario=scenario)
    assert sorted(written) == [
        "consumption.png",
        "events.log",
        "load.png",
        "report.json",
        "summary.csv",
    ]
    for name in written:
        assert os.path.getsize(tmp_path / name) > 0


def test_report_json_round_trips(tmp_path) -> None:
    scenario = small_scenario()
    report = run(scenario)
    write_report(report, str(tmp_path), scenario=scenario)
    with open(tmp_path / "report.json", encoding="utf-8") as handle:
        loaded = json.load(handle)
    assert loaded == json.loads(json.dumps(report.to_json()))
    assert set(loaded["meters"]) == {"7", "8"}


def test_events_log_matches_report(tmp_path) -> None:
    report = run(small_scenario())
    write_report(report, str(tmp_path))
    lines = (tmp_path / "events.log").read_text(encoding="utf-8").splitlines()
    assert lines == report.events


def test_summary_csv_parses_and_agrees(tmp_path) -> None:
    report = run(small_scenario())
    write_report(report, str(tmp_path))
    with open(tmp_path / "summary.csv", newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["meter_id"] for r in rows] == ["7", "8"]
    for row in rows:
        meter = report.meters[row["meter_id"]]
        assert int(row["total_pulses"]) == meter["total_pulses"]
        assert row["total_units"] == meter["total_units"]
        assert int(row["telegrams_sent"]) == meter["sent"]


def test_text_artifacts_are_deterministic(tmp_path) -> None:
    scenario = small_scenario()
    dir_a = tmp_path / "a"
    dir_b = tmp_path / "b"
    write_report(run(scenario), str(dir_a), scenario=scenario)
    write_report(run(scenario), str(dir_b), scenario=scenario)
    for name in ("report.json", "events.log", "summary.csv"):
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name


def test_pngs_have_image_signature(tmp_path) -> None:
    scenario = small_scenario()
    write_report(run(scenario), str(tmp_path), scenario=scenario)
    for name in ("consumption.png", "load.png"):
        with open(tmp_path / name, "rb") as handle:
            assert handle.read(8) == b"\x89PNG\r\n\x1a\n", name
