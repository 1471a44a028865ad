"""JSON HTTP API over the station, plus live-simulation panel endpoints.

Routes (all request/response bodies are JSON):

    GET  /healthz
    POST /telegrams                      {from_number, body, received_at_s}
    GET  /meters
    POST /meters                         {meter_id, dest_number}
    GET  /meters/{id}
    GET  /meters/{id}/readings?from&to
    GET  /meters/{id}/bill?from&to&with_extra=true|false
    GET  /tariff
    PUT  /tariff                         {normal_rate, peak_rate, fixed_charge}
    GET  /sim/meters/{id}/panel          (live mode only)
    POST /sim/meters/{id}/keys           {keys: [...]}        (live mode only)
    POST /sim/meters/{id}/load           {power_w}            (live mode only)

Every response carries permissive CORS headers so a browser console served
from another origin can call the API directly.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .firmware import KEY_DOWN, KEY_ENTER, KEY_UP
from .station import (
    DuplicateMeterError,
    NoReadingsError,
    Station,
    TariffSchedule,
    UnknownMeterError,
    format_money,
)

log = logging.getLogger(__name__)

VALID_KEYS = set("0123456789*#") | {KEY_UP, KEY_DOWN, KEY_ENTER}

_METER = re.compile(r"^/meters/([0-9]+)$")
_READINGS = re.compile(r"^/meters/([0-9]+)/readings$")
_BILL = re.compile(r"^/meters/([0-9]+)/bill$")
_PANEL = re.compile(r"^/sim/meters/([0-9]+)/panel$")
_KEYS = re.compile(r"^/sim/meters/([0-9]+)/keys$")
_LOAD = re.compile(r"^/sim/meters/([0-9]+)/load$")


class ApiError(Exception):
    """Maps straight to an HTTP status + JSON error body."""

    def __init__(self, status: int, message: str, **extra) -> None:
        super().__init__(message)
        self.status = status
        self.body = {"error": message, **extra}


def _make_handler(station: Station, live) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        # -- plumbing ----------------------------------------------------

        def log_message(self, fmt: str, *args) -> None:
            log.debug("%s - %s", self.address_string(), fmt % args)

        def _reply(self, status: int, obj: dict | None) -> None:
            payload = b"" if obj is None else json.dumps(obj).encode("utf-8")
            self.send_response(status)
            if payload:
                self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            if payload:
                self.wfile.write(payload)

        def _json_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                obj = json.loads(raw or b"{}")
            except json.JSONDecodeError as err:
                raise ApiError(400, f"invalid JSON body: {err}") from None
            if not isinstance(obj, dict):
                raise ApiError(400, "JSON body must be an object")
            return obj

        def _query(self) -> dict[str, str]:
            qs = urllib.parse.urlparse(self.path).query
            return {k: v[-1] for k, v in urllib.parse.parse_qs(qs).items()}

        def _route(self, method: str) -> None:
            path = urllib.parse.urlparse(self.path).path
            try:
                handler = self._find(method, path)
                if handler is None:
                    raise ApiError(404, f"no route for {method} {path}")
                handler()
            except ApiError as err:
                self._reply(err.status, err.body)
            except UnknownMeterError as err:
                self._reply(404, {"error": "invalid entry", "detail": str(err)})
            except DuplicateMeterError as err:
                self._reply(409, {"error": str(err)})
            except NoReadingsError as err:
                self._reply(422, {"error": str(err)})
            except ValueError as err:
                self._reply(400, {"error": str(err)})
            except Exception:  # noqa: BLE001 - last-resort 500, keep serving
                log.exception("unhandled error for %s %s", method, path)
                self._reply(500, {"error": "internal error"})

        def _find(self, method: str, path: str):
            if method == "GET":
                if path == "/healthz":
                    return self._get_healthz
                if path == "/meters":
                    return self._get_meters
                if path == "/tariff":
                    return self._get_tariff
                if m := _METER.match(path):
                    return lambda: self._get_meter(m.group(1))
                if m := _READINGS.match(path):
                    return lambda: self._get_readings(m.group(1))
                if m := _BILL.match(path):
                    return lambda: self._get_bill(m.group(1))
                if m := _PANEL.match(path):
                    return lambda: self._get_panel(m.group(1))
            elif method == "POST":
                if path == "/telegrams":
                    return self._post_telegram
                if path == "/meters":
                    return self._post_meter
                if m := _KEYS.match(path):
                    return lambda: self._post_keys(m.group(1))
                if m := _LOAD.match(path):
                    return lambda: self._post_load(m.group(1))
            elif method == "PUT":
                if path == "/tariff":
                    return self._put_tariff
            return None

        def do_GET(self) -> None:  # noqa: N802 - http.server API
            self._route("GET")

        def do_POST(self) -> None:  # noqa: N802
            self._route("POST")

        def do_PUT(self) -> None:  # noqa: N802
            self._route("PUT")

        def do_OPTIONS(self) -> None:  # noqa: N802
            self._reply(204, None)

        # -- field helpers --------------------------------------------------

        @staticmethod
        def _field(obj: dict, name: str, kind: type):
            if name not in obj:
                raise ApiError(400, f"missing field: {name}")
            value = obj[name]
            if kind is int and isinstance(value, bool) or not isinstance(value, kind):
                raise ApiError(400, f"field {name} must be {kind.__name__}")
            return value

        def _int_param(self, query: dict, name: str) -> int | None:
            if name not in query:
                return None
            try:
                return int(query[name])
            except ValueError:
                raise ApiError(400, f"query parameter {name} must be an integer") from None

        # -- station routes --------------------------------------------------

        def _get_healthz(self) -> None:
            self._reply(
                200,
                {
                    "status": "ok",
                    "live": live is not None,
                    "time_s": live.now_s if live is not None else None,
                    "meters": len(station.list_meters()),
                },
            )

        def _post_telegram(self) -> None:
            obj = self._json_body()
            result = station.ingest(
                from_number=self._field(obj, "from_number", str),
                body=self._field(obj, "body", str),
                received_at_s=self._field(obj, "received_at_s", int),
            )
            if result.status == "rejected":
                self._reply(
                    422,
                    {
                        "status": "rejected",
                        "category": result.rejection.category,
                        "detail": result.rejection.detail,
                    },
                )
            else:
                self._reply(202, {"status": result.status, "reading": result.record.to_json()})

        def _get_meters(self) -> None:
            self._reply(200, {"meters": [m.to_json() for m in station.list_meters()]})

        def _post_meter(self) -> None:
            obj = self._json_body()
            meter = station.register_meter(
                meter_id=self._field(obj, "meter_id", str),
                dest_number=self._field(obj, "dest_number", str),
            )
            self._reply(201, meter.to_json())

        def _get_meter(self, meter_id: str) -> None:
            meter = station.get_meter(meter_id)
            if meter is None:
                raise ApiError(404, "invalid entry", meter_id=meter_id)
            self._reply(200, meter.to_json())

        def _get_readings(self, meter_id: str) -> None:
            query = self._query()
            rows = station.readings(
                meter_id,
                from_s=self._int_param(query, "from"),
                to_s=self._int_param(query, "to"),
            )
            self._reply(200, {"meter_id": meter_id, "readings": [r.to_json() for r in rows]})

        def _get_bill(self, meter_id: str) -> None:
            query = self._query()
            with_extra = query.get("with_extra", "true").lower() != "false"
            bill = station.compute_bill(
                meter_id,
                from_s=self._int_param(query, "from") or 0,
                to_s=self._int_param(query, "to"),
            )
            body = bill.to_json()
            body["with_extra"] = with_extra
            body["amount_due"] = format_money(
                bill.amount_total_c if with_extra else bill.amount_without_extra_c
            )
            body["tariff"] = station.tariff.to_json()
            self._reply(200, body)

        def _get_tariff(self) -> None:
            self._reply(200, station.tariff.to_json())

        def _put_tariff(self) -> None:
            obj = self._json_body()
            for name in ("normal_rate", "peak_rate", "fixed_charge"):
                self._field(obj, name, str)
            tariff = TariffSchedule.from_json(obj)
            station.set_tariff(tariff)
            self._reply(200, tariff.to_json())

        # -- live-simulation routes ----------------------------------------

        def _require_live(self):
            if live is None:
                raise ApiError(404, "live mode not active")
            return live

        def _get_panel(self, meter_id: str) -> None:
            panel = self._require_live().panel(meter_id)
            if panel is None:
                raise ApiError(404, "invalid entry", meter_id=meter_id)
            self._reply(200, panel)

        def _post_keys(self, meter_id: str) -> None:
            obj = self._json_body()
            keys = self._field(obj, "keys", list)
            bad = [k for k in keys if k not in VALID_KEYS]
            if bad:
                raise ApiError(400, f"unknown keys: {bad}")
            if not self._require_live().queue_keys(meter_id, keys):
                raise ApiError(404, "invalid entry", meter_id=meter_id)
            self._reply(202, {"queued": len(keys)})

        def _post_load(self, meter_id: str) -> None:
            obj = self._json_body()
            power_w = self._field(obj, "power_w", int)
            if power_w < 0:
                raise ApiError(400, "power_w must be >= 0")
            if not self._require_live().set_load(meter_id, power_w):
                raise ApiError(404, "invalid entry", meter_id=meter_id)
            self._reply(202, {"meter_id": meter_id, "power_w": power_w})

    return Handler


class ApiServer:
    """Threaded HTTP server wrapper; pass port 0 to pick a free port."""

    def __init__(
        self,
        station: Station,
        live=None,
        host: str = "127.0.0.1",
        port: int = 0,
    ) -> None:
        self.httpd = ThreadingHTTPServer((host, port), _make_handler(station, live))
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self.httpd.server_address[0]

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
