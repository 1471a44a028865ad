"""GSM modem emulation: AT command session plus a seeded SMS channel.

The session implements exactly the text-mode subset the meter firmware uses
(AT, ATE0, AT+CMGF=1, AT+CMGS) with standard result framing.  The channel
adds configurable latency and seeded random loss so multi-meter runs stay
reproducible: each sender draws drop decisions from its own stream, so one
meter's traffic never perturbs another's fate.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

CR_LF = b"\r\n"
OK = b"\r\nOK\r\n"
ERROR = b"\r\nERROR\r\n"
PROMPT = b"\r\n> "
CTRL_Z = 0x1A
ESC = 0x1B

MAX_BODY_BYTES = 160

_CMGS_RE = re.compile(rb'AT\+CMGS="([0-9]+)"')

COMMAND = "COMMAND"
AWAIT_BODY = "AWAIT_BODY"


@dataclass(frozen=True)
class SmsMessage:
    """One submitted text message."""

    from_number: str
    to_number: str
    body: bytes
    submit_time_s: int


class AtSession:
    """Byte-level AT command interpreter for one modem.

    Feed it raw serial bytes; it returns the modem's response bytes plus any
    messages completed by a Ctrl-Z terminator.  Echo starts on and mirrors
    input bytes ahead of any result code until ATE0 turns it off.
    """

    def __init__(self, own_number: str = "") -> None:
        self.own_number = own_number
        self.echo = True
        self.text_mode = False
        self.state = COMMAND
        self.pending_dest: str | None = None
        self._line = bytearray()
        self._body = bytearray()

    def feed(self, data: bytes, now_s: int = 0) -> tuple[bytes, list[SmsMessage]]:
        """Process serial input; returns (response bytes, submitted messages)."""
        out = bytearray()
        submitted: list[SmsMessage] = []
        for byte in data:
            if self.state == COMMAND:
                if byte == CTRL_Z:
                    continue  # stray terminator outside a message body
                if self.echo:
                    out.append(byte)
                self._line.append(byte)
                if self._line.endswith(CR_LF):
                    line = bytes(self._line[:-2])
                    self._line.clear()
                    out += self._run_command(line)
            else:  # AWAIT_BODY
                if byte == CTRL_Z:
                    out += self._finish_message(submitted, now_s)
                elif byte == ESC:
                    self._leave_body_state()
                    out += OK
                else:
                    if self.echo:
                        out.append(byte)
                    self._body.append(byte)
        return bytes(out), submitted

    def _run_command(self, line: bytes) -> bytes:
        if line == b"":
            return b""
        if line == b"AT":
            return OK
        if line == b"ATE0":
            self.echo = False
            return OK
        if line == b"AT+CMGF=1":
            self.text_mode = True
            return OK
        match = _CMGS_RE.fullmatch(line)
        if match:
            if not self.text_mode:
                return ERROR
            self.pending_dest = match.group(1).decode("ascii")
            self.state = AWAIT_BODY
            return PROMPT
        return ERROR

    def _finish_message(self, submitted: list[SmsMessage], now_s: int) -> bytes:
        body = bytes(self._body)
        dest = self.pending_dest
        self._leave_body_state()
        if dest is None or len(body) > MAX_BODY_BYTES:
            return ERROR
        submitted.append(
            SmsMessage(
                from_number=self.own_number,
                to_number=dest,
                body=body,
                submit_time_s=now_s,
            )
        )
        return OK

    def _leave_body_state(self) -> None:
        self.state = COMMAND
        self.pending_dest = None
        self._body.clear()


@dataclass(frozen=True)
class ChannelConfig:
    """Delivery behaviour of the simulated SMS network."""

    latency_s: int = 0
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.latency_s < 0:
            raise ValueError("latency_s must be >= 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")


@dataclass
class _InFlight:
    due_s: int
    message: SmsMessage


class SmsChannel:
    """Seeded store-and-forward SMS network.

    Drop decisions come from one PRNG stream per sender number, keyed by
    (seed, number), so results for a given meter do not depend on what other
    meters are declared or when they transmit.  Every submitted message is
    accounted for: submitted == delivered + dropped.
    """

    def __init__(self, config: ChannelConfig = ChannelConfig()) -> None:
        self.config = config
        self._queue: list[_InFlight] = []
        self._streams: dict[str, random.Random] = {}
        self.submitted: list[SmsMessage] = []
        self.delivered: list[SmsMessage] = []
        self.dropped: list[SmsMessage] = []

    def _stream(self, number: str) -> random.Random:
        if number not in self._streams:
            self._streams[number] = random.Random(f"{self.config.seed}:{number}")
        return self._streams[number]

    def submit(self, message: SmsMessage) -> None:
        self.submitted.append(message)
        if self._stream(message.from_number).random() < self.config.drop_probability:
            self.dropped.append(message)
            return
        self._queue.append(
            _InFlight(due_s=message.submit_time_s + self.config.latency_s, message=message)
        )

    def step(self, now_s: int) -> list[SmsMessage]:
        """Deliver every queued message due by now_s, in submission order."""
        due = [item.message for item in self._queue if item.due_s <= now_s]
        self._queue = [item for item in self._queue if item.due_s > now_s]
        self.delivered.extend(due)
        return due
