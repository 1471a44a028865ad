import random

import pytest

from wemsim.modem import (
    AtSession,
    ChannelConfig,
    SmsChannel,
    SmsMessage,
)


def drive(session: AtSession, data: bytes, now_s: int = 0) -> tuple[bytes, list[SmsMessage]]:
    return session.feed(data, now_s=now_s)


def test_four_step_send_script_golden_transcript() -> None:
    """The firmware's whole send sequence, checked byte for byte."""
    session = AtSession(own_number="12345")
    out, msgs = drive(session, b"AT\r\n")
    assert out == b"AT\r\n\r\nOK\r\n" and msgs == []
    out, msgs = drive(session, b"ATE0\r\n")
    assert out == b"ATE0\r\n\r\nOK\r\n" and msgs == []  # ATE0 itself still echoes
    out, msgs = drive(session, b"AT\r\n")
    assert out == b"\r\nOK\r\n"  # echo now off
    out, msgs = drive(session, b"AT+CMGF=1\r\n")
    assert out == b"\r\nOK\r\n" and msgs == []
    out, msgs = drive(session, b'AT+CMGS="919876543210"\r\n')
    assert out == b"\r\n> " and msgs == []
    out, msgs = drive(session, b"#$12345$00.00$00.00$*\x1a", now_s=60)
    assert out == b"\r\nOK\r\n"
    assert msgs == [
        SmsMessage(
            from_number="12345",
            to_number="919876543210",
            body=b"#$12345$00.00$00.00$*",
            submit_time_s=60,
        )
    ]


def test_byte_at_a_time_equals_bulk_feed() -> None:
    script = (
        b"AT\r\nATE0\r\nAT+CMGF=1\r\n"
        b'AT+CMGS="919812345678"\r\nhello\x1a'
        b"BOGUS\r\nAT\r\n"
    )
    bulk = AtSession(own_number="7")
    bulk_out, bulk_msgs = bulk.feed(script, now_s=5)
    stepped = AtSession(own_number="7")
    stepped_out = b""
    stepped_msgs: list[SmsMessage] = []
    for i in range(len(script)):
        out, msgs = stepped.feed(script[i : i + 1], now_s=5)
        stepped_out += out
        stepped_msgs += msgs
    assert stepped_out == bulk_out
    assert stepped_msgs == bulk_msgs


def test_echo_on_mirrors_body_bytes_too() -> None:
    session = AtSession()
    session.feed(b"AT+CMGF=1\r\n")
    session.feed(b'AT+CMGS="123"\r\n')
    out, _ = session.feed(b"hi\x1a")
    assert out.startswith(b"hi")


def test_echo_law_no_command_bytes_after_ate0() -> None:
    session = AtSession()
    session.feed(b"ATE0\r\n")
    for line in (b"AT\r\n", b"AT+CMGF=1\r\n", b"NONSENSE\r\n"):
        out, _ = session.feed(line)
        assert line[:-2] not in out


def test_unknown_command_gives_error_session_survives() -> None:
    session = AtSession()
    session.feed(b"ATE0\r\n")
    out, _ = session.feed(b"AT+XYZ?\r\n")
    assert out == b"\r\nERROR\r\n"
    out, _ = session.feed(b"\x00\xff garbage \r\n")
    assert out == b"\r\nERROR\r\n"
    out, _ = session.feed(b"AT\r\n")
    assert out == b"\r\nOK\r\n"


def test_cmgs_without_text_mode_is_error() -> None:
    session = AtSession()
    session.feed(b"ATE0\r\n")
    out, msgs = session.feed(b'AT+CMGS="919876543210"\r\n')
    assert out == b"\r\nERROR\r\n" and msgs == []
    session.feed(b"AT+CMGF=1\r\n")
    out, _ = session.feed(b'AT+CMGS="919876543210"\r\n')
    assert out == b"\r\n> "


def test_cmgs_requires_quoted_digits() -> None:
    session = AtSession()
    session.feed(b"ATE0\r\nAT+CMGF=1\r\n")
    for bad in (b'AT+CMGS="abc"\r\n', b"AT+CMGS=123\r\n", b'AT+CMGS=""\r\n'):
        out, _ = session.feed(bad)
        assert out == b"\r\nERROR\r\n", bad


def test_escape_cancels_message() -> None:
    session = AtSession(own_number="9")
    session.feed(b"ATE0\r\nAT+CMGF=1\r\n")
    session.feed(b'AT+CMGS="111"\r\n')
    out, msgs = session.feed(b"discard me\x1b")
    assert out == b"\r\nOK\r\n" and msgs == []
    # Session is back in command state and can send again.
    out, _ = session.feed(b'AT+CMGS="222"\r\n')
    assert out == b"\r\n> "
    out, msgs = session.feed(b"kept\x1a", now_s=9)
    assert msgs == [SmsMessage("9", "222", b"kept", 9)]


def test_stray_ctrl_z_in_command_state_is_ignored() -> None:
    session = AtSession()
    session.feed(b"ATE0\r\n")
    out, msgs = session.feed(b"\x1a\x1a")
    assert out == b"" and msgs == []
    out, _ = session.feed(b"A\x1aT\r\n")  # terminator dropped mid-line too
    assert out == b"\r\nOK\r\n"


def test_body_length_cap() -> None:
    session = AtSession(own_number="1")
    session.feed(b"ATE0\r\nAT+CMGF=1\r\n")
    session.feed(b'AT+CMGS="42"\r\n')
    out, msgs = session.feed(b"x" * 160 + b"\x1a")
    assert out == b"\r\nOK\r\n" and len(msgs) == 1 and len(msgs[0].body) == 160
    session.feed(b'AT+CMGS="42"\r\n')
    out, msgs = session.feed(b"x" * 161 + b"\x1a")
    assert out == b"\r\nERROR\r\n" and msgs == []


def msg(sender: str, t: int, tag: str = "") -> SmsMessage:
    return SmsMessage(sender, "900", f"body-{sender}-{t}{tag}".encode(), t)


def test_zero_latency_zero_loss_delivers_same_step() -> None:
    channel = SmsChannel(ChannelConfig(latency_s=0, drop_probability=0.0, seed=1))
    channel.submit(msg("1", 10))
    assert channel.step(10) == [msg("1", 10)]
    assert channel.step(11) == []


def test_latency_defers_delivery() -> None:
    channel = SmsChannel(ChannelConfig(latency_s=5, drop_probability=0.0, seed=1))
    channel.submit(msg("1", 10))
    assert channel.step(14) == []
    assert channel.step(15) == [msg("1", 10)]


def test_drop_probability_one_delivers_nothing() -> None:
    channel = SmsChannel(ChannelConfig(latency_s=0, drop_probability=1.0, seed=1))
    for t in range(20):
        channel.submit(msg("1", t))
        assert channel.step(t) == []
    assert len(channel.dropped) == 20


def test_same_seed_same_submissions_identical_trace() -> None:
    def run() -> list[tuple[int, SmsMessage]]:
        channel = SmsChannel(ChannelConfig(latency_s=2, drop_probability=0.5, seed=77))
        trace = []
        for t in range(50):
            if t % 3 == 0:
                channel.submit(msg("8", t))
            for delivered in channel.step(t):
                trace.append((t, delivered))
        return trace

    assert run() == run()


def test_different_seed_changes_drop_pattern() -> None:
    def dropped_for(seed: int) -> list[int]:
        channel = SmsChannel(ChannelConfig(drop_probability=0.5, seed=seed))
        for t in range(64):
            channel.submit(msg("5", t))
        return [m.submit_time_s for m in channel.dropped]

    assert dropped_for(1) != dropped_for(2)


def test_per_sender_streams_are_independent() -> None:
    """Adding a second meter's traffic must not change the first meter's fate."""
    config = ChannelConfig(latency_s=0, drop_probability=0.5, seed=9)

    alone = SmsChannel(config)
    for t in range(40):
        alone.submit(msg("101", t))
    fate_alone = [m in alone.dropped for m in alone.submitted]

    shared = SmsChannel(config)
    for t in range(40):
        shared.submit(msg("202", t))  # interloper submits first each step
        shared.submit(msg("101", t))
    fate_shared = [m in shared.dropped for m in shared.submitted if m.from_number == "101"]

    assert fate_alone == fate_shared


def test_accounting_submitted_equals_delivered_plus_dropped() -> None:
    rng = random.Random(41)
    channel = SmsChannel(ChannelConfig(latency_s=3, drop_probability=0.3, seed=4))
    for t in range(200):
        for sender in ("1", "2", "3"):
            if rng.random() < 0.4:
                channel.submit(msg(sender, t))
        channel.step(t)
    channel.step(10_000)  # drain the queue
    assert len(channel.submitted) == len(channel.delivered) + len(channel.dropped)
    assert set(channel.submitted) == set(channel.delivered) | set(channel.dropped)


def test_delivery_preserves_submission_order() -> None:
    channel = SmsChannel(ChannelConfig(latency_s=1, drop_probability=0.0, seed=0))
    batch = [msg("1", 5, tag=f"-{i}") for i in range(10)]
    for m in batch:
        channel.submit(m)
    assert channel.step(6) == batch


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        ChannelConfig(latency_s=-1)
    with pytest.raises(ValueError):
        ChannelConfig(drop_probability=1.5)
