"""Command-line entry point.

Subcommands:
  run      execute a scenario file and write report artifacts
  serve    start the head-end HTTP API, optionally with a live stepped scenario
  encode   build one telegram from a meter id and pulse counters
  decode   pretty-print one telegram
  at-repl  interactive AT session against a simulated modem

`serve` settings resolve in precedence order: command-line flag, then
environment variable (WEM_HOST, WEM_PORT, WEM_DATA_DIR, WEM_SCALE,
WEM_NORMAL_RATE, WEM_PEAK_RATE, WEM_FIXED_CHARGE), then --config file,
then built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile

from .harness import LiveRunner, run
from .httpapi import ApiServer
from .modem import AWAIT_BODY, AtSession
from .scenario import ScenarioError, load_scenario
from .station import Station, TariffSchedule
from .telegram import TelegramError, decode, encode, from_counts

log = logging.getLogger(__name__)

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8000
DEFAULT_SCALE = 60

ENV_PREFIX = "WEM_"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wemsim",
        description="Wireless energy-metering network simulator and head end.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file deterministically")
    p_run.add_argument("scenario", help="scenario file (JSON)")
    p_run.add_argument("--out", metavar="DIR", help="write report artifacts into DIR")
    p_run.add_argument(
        "--state-dir",
        metavar="DIR",
        help="persistent state directory (reuse to simulate reboots); default is ephemeral",
    )
    p_run.add_argument("--events", action="store_true", help="print the event log to stdout")

    p_serve = sub.add_parser("serve", help="serve the head-end HTTP API")
    p_serve.add_argument(
        "scenario", nargs="?", help="optional scenario to step live while serving"
    )
    p_serve.add_argument("--config", metavar="FILE", help="settings file (JSON)")
    p_serve.add_argument("--host", help=f"bind address (default {DEFAULT_HOST})")
    p_serve.add_argument("--port", type=int, help=f"bind port (default {DEFAULT_PORT})")
    p_serve.add_argument("--data-dir", metavar="DIR", help="persistent head-end storage")
    p_serve.add_argument(
        "--scale", type=int, help=f"simulated seconds per real second (default {DEFAULT_SCALE})"
    )

    p_encode = sub.add_parser("encode", help="build a telegram from pulse counters")
    p_encode.add_argument("meter_id")
    p_encode.add_argument("normal_pulses", type=int, help="normal-rate pulse counter")
    p_encode.add_argument("extra_pulses", type=int, help="peak-window pulse counter")

    p_decode = sub.add_parser("decode", help="pretty-print a telegram")
    p_decode.add_argument("telegram")

    sub.add_parser("at-repl", help="interactive AT session (Ctrl-D to exit)")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as err:
        for problem in err.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    report = run(scenario, state_dir=args.state_dir)
    if args.events:
        for line in report.events:
            print(line)
    if args.out:
        from .report import write_report  # matplotlib import deferred to first use

        written = write_report(report, args.out, scenario=scenario)
        for name in written:
            print(f"wrote {os.path.join(args.out, name)}")
    for meter_id in sorted(report.meters):
        row = report.meters[meter_id]
        print(
            f"meter {meter_id}: total={row['total_units']} extra={row['ecu_units']} "
            f"sent={row['sent']} delivered={row['delivered']} dropped={row['dropped']}"
        )
    return 0


def _setting(args_value, env_name: str, config: dict, key: str, default, convert=str):
    """One serve setting under the flag > environment > file > default order."""
    if args_value is not None:
        return args_value
    env_value = os.environ.get(ENV_PREFIX + env_name)
    if env_value is not None:
        return convert(env_value)
    if key in config:
        return config[key]
    return default


def _serve_tariff(config: dict) -> TariffSchedule | None:
    """Tariff overrides from environment/config, or None to keep stored/default rates."""
    base = config.get("tariff", {})
    normal = os.environ.get(ENV_PREFIX + "NORMAL_RATE", base.get("normal_rate"))
    peak = os.environ.get(ENV_PREFIX + "PEAK_RATE", base.get("peak_rate"))
    fixed = os.environ.get(ENV_PREFIX + "FIXED_CHARGE", base.get("fixed_charge"))
    if normal is None and peak is None and fixed is None:
        return None
    return TariffSchedule.from_json(
        {
            "normal_rate": normal if normal is not None else "3.00",
            "peak_rate": peak if peak is not None else "5.00",
            "fixed_charge": fixed if fixed is not None else "0.00",
        }
    )


def _cmd_serve(args: argparse.Namespace) -> int:
    config: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                config = json.load(handle)
        except (OSError, json.JSONDecodeError) as err:
            print(f"error: cannot read config {args.config}: {err}", file=sys.stderr)
            return 2
        if not isinstance(config, dict):
            print(f"error: config {args.config} must be a JSON object", file=sys.stderr)
            return 2

    host = _setting(args.host, "HOST", config, "host", DEFAULT_HOST)
    port = _setting(args.port, "PORT", config, "port", DEFAULT_PORT, convert=int)
    data_dir = _setting(args.data_dir, "DATA_DIR", config, "data_dir", None)
    scale = _setting(args.scale, "SCALE", config, "scale", DEFAULT_SCALE, convert=int)
    tariff = _serve_tariff(config)

    live = None
    if args.scenario:
        try:
            scenario = load_scenario(args.scenario)
        except ScenarioError as err:
            for problem in err.problems:
                print(f"error: {problem}", file=sys.stderr)
            return 2
        if tariff is not None:
            scenario = dataclasses.replace(scenario, tariff=tariff)
        state_dir = data_dir or tempfile.mkdtemp(prefix="wemsim-serve-")
        live = LiveRunner(scenario, state_dir=state_dir, scale=scale)
        station = live.station
    else:
        station = Station(data_dir=data_dir, tariff=tariff)

    server = ApiServer(station, live=live, host=host, port=port)
    server.start()
    if live is not None:
        live.start()
        print(f"serving on {server.url} (live scenario at {scale}x)", flush=True)
    else:
        print(f"serving on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if live is not None:
            live.stop()
        server.shutdown()
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    try:
        telegram = from_counts(args.meter_id, args.normal_pulses, args.extra_pulses)
    except (TelegramError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(encode(telegram).decode("ascii"))
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    try:
        telegram = decode(args.telegram)
    except TelegramError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"meter id : {telegram.meter_id}")
    print(f"units    : {telegram.ncu_display}")
    print(f"extra    : {telegram.ecu_display}")
    return 0


def _cmd_at_repl(args: argparse.Namespace) -> int:
    session = AtSession(own_number="repl")
    print("AT session ready; ^Z ends a message body, ^[ cancels it, Ctrl-D exits.")
    for line in sys.stdin:
        line = line.rstrip("\n")
        if session.state == AWAIT_BODY and line.endswith("^Z"):
            data = line[:-2].encode("latin-1") + b"\x1a"
        elif session.state == AWAIT_BODY and line.endswith("^["):
            data = line[:-2].encode("latin-1") + b"\x1b"
        else:
            data = line.encode("latin-1") + b"\r\n"
        response, messages = session.feed(data)
        text = response.decode("latin-1")
        if text.strip():
            print(text.strip("\r\n"))
        for message in messages:
            print(f"[SMS to {message.to_number}] {message.body.decode('latin-1')}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "serve": _cmd_serve,
        "encode": _cmd_encode,
        "decode": _cmd_decode,
        "at-repl": _cmd_at_repl,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
