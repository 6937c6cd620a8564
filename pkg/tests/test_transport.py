import socket
import threading

import pytest
from hypothesis import given, settings, strategies as st

from privalign import transport
from privalign.errors import ChannelClosedError, FramingError, InputError
from privalign.transport import (
    ByteLedger,
    Frame,
    LoopbackChannel,
    TAG_NAMES,
    TAG_MIN_REQUEST,
    TAG_MIN_RESPONSE,
    TAG_PUBLIC_KEY,
    TAG_SESSION_CONFIG,
    TcpChannel,
    decode_bigint,
    encode_bigint,
    encode_frame,
    frame_wire_size,
)


class TestBigintCodec:
    def test_zero_is_one_byte(self):
        assert encode_bigint(0) == b"\x00\x00\x00\x01\x00"

    def test_256(self):
        assert encode_bigint(256) == b"\x00\x00\x00\x02\x01\x00"

    def test_255(self):
        assert encode_bigint(255) == b"\x00\x00\x00\x01\xff"

    def test_negative_rejected(self):
        with pytest.raises(InputError):
            encode_bigint(-1)

    @given(st.integers(0, 1 << 2048))
    @settings(max_examples=300, deadline=None)
    def test_roundtrip(self, v):
        data = encode_bigint(v)
        value, offset = decode_bigint(data)
        assert value == v
        assert offset == len(data)

    def test_roundtrip_ciphertext_sized(self, rng):
        for _ in range(200):
            v = rng.getrandbits(2048)
            value, _ = decode_bigint(encode_bigint(v))
            assert value == v

    def test_sequential_decode(self):
        blob = encode_bigint(7) + encode_bigint(1 << 100) + encode_bigint(0)
        v1, off = decode_bigint(blob)
        v2, off = decode_bigint(blob, off)
        v3, off = decode_bigint(blob, off)
        assert (v1, v2, v3) == (7, 1 << 100, 0)
        assert off == len(blob)

    def test_truncated_prefix(self):
        with pytest.raises(FramingError):
            decode_bigint(b"\x00\x00")

    def test_truncated_body(self):
        with pytest.raises(FramingError):
            decode_bigint(b"\x00\x00\x00\x05\x01\x02")


class TestFrameEncoding:
    def test_layout(self):
        data = encode_frame(Frame(TAG_PUBLIC_KEY, b"abc"))
        assert data == b"\x01\x00\x00\x00\x03abc"

    def test_all_tags_roundtrip_over_loopback(self):
        alice, bob = LoopbackChannel.pair(timeout=5)
        for tag in TAG_NAMES:
            frame = Frame(tag, bytes([tag]) * 7)
            alice.send_frame(frame)
            assert bob.recv_frame() == frame

    def test_unknown_tag_rejected(self):
        with pytest.raises(FramingError):
            encode_frame(Frame(0x42, b""))

    def test_oversize_payload_rejected(self):
        huge = Frame(TAG_PUBLIC_KEY, b"\x00" * (transport.MAX_PAYLOAD_BYTES + 1))
        with pytest.raises(FramingError):
            encode_frame(huge)

    def test_wire_size(self):
        assert frame_wire_size(Frame(TAG_PUBLIC_KEY, b"12345")) == 10


class TestByteLedger:
    def test_totals_and_fraction(self):
        ledger = ByteLedger()
        ledger.record("alice", TAG_PUBLIC_KEY, 100)
        ledger.record("bob", TAG_MIN_REQUEST, 150)
        ledger.record("bob", TAG_MIN_REQUEST, 50)
        report = ledger.report()
        assert report["bytes_total"] == 300
        assert report["bytes_alice"] == 100
        assert report["bytes_bob"] == 200
        assert report["bob_fraction"] == pytest.approx(2 / 3)

    def test_per_tag_sums_match_totals(self):
        ledger = ByteLedger()
        ledger.record("alice", TAG_PUBLIC_KEY, 10)
        ledger.record("alice", TAG_MIN_RESPONSE, 20)
        ledger.record("bob", TAG_MIN_REQUEST, 30)
        report = ledger.report()
        assert sum(e["bytes"] for e in report["per_tag"].values()) == report["bytes_total"]
        assert ledger.frame_count(TAG_MIN_REQUEST) == 1

    def test_empty_session(self):
        assert ByteLedger().report()["bob_fraction"] == 0.0


TRANSCRIPT = [
    ("bob", Frame(TAG_SESSION_CONFIG, b"cfg")),
    ("alice", Frame(TAG_PUBLIC_KEY, b"k" * 60)),
    ("bob", Frame(TAG_MIN_REQUEST, b"r" * 90)),
    ("alice", Frame(TAG_MIN_RESPONSE, b"m" * 30)),
]


def _run_transcript_loopback():
    alice, bob = LoopbackChannel.pair(timeout=5)
    ends = {"alice": alice, "bob": bob}
    for sender, frame in TRANSCRIPT:
        ends[sender].send_frame(frame)
        other = "bob" if sender == "alice" else "alice"
        assert ends[other].recv_frame() == frame
    return alice.ledger.report(), bob.ledger.report()


def _run_transcript_tcp():
    reports = {}
    ready = threading.Event()
    port_holder = {}

    def server():
        with socket.socket() as listener:
            listener.bind(("127.0.0.1", 0))
            listener.listen(1)
            port_holder["port"] = listener.getsockname()[1]
            ready.set()
            conn, _ = listener.accept()
        channel = TcpChannel(conn, role="alice")
        for sender, frame in TRANSCRIPT:
            if sender == "alice":
                channel.send_frame(frame)
            else:
                assert channel.recv_frame() == frame
        reports["alice"] = channel.ledger.report()
        channel.close()

    thread = threading.Thread(target=server)
    thread.start()
    ready.wait(5)
    channel = TcpChannel.connect("127.0.0.1", port_holder["port"], role="bob")
    for sender, frame in TRANSCRIPT:
        if sender == "bob":
            channel.send_frame(frame)
        else:
            assert channel.recv_frame() == frame
    reports["bob"] = channel.ledger.report()
    channel.close()
    thread.join(5)
    return reports["alice"], reports["bob"]


class TestChannels:
    def test_loopback_in_order_exactly_once(self):
        alice, bob = LoopbackChannel.pair(timeout=5)
        for seq in range(50):
            alice.send_frame(Frame(TAG_MIN_REQUEST, seq.to_bytes(4, "big")))
        seen = [int.from_bytes(bob.recv_frame().payload, "big") for _ in range(50)]
        assert seen == list(range(50))

    def test_loopback_close_unblocks_peer(self):
        alice, bob = LoopbackChannel.pair(timeout=5)
        alice.close()
        with pytest.raises(ChannelClosedError):
            bob.recv_frame()

    def test_recv_on_closed_channel(self):
        alice, _ = LoopbackChannel.pair(timeout=5)
        alice.close()
        with pytest.raises(ChannelClosedError):
            alice.recv_frame()

    def test_both_endpoints_see_identical_ledgers(self):
        alice_report, bob_report = _run_transcript_loopback()
        assert alice_report == bob_report

    def test_tcp_and_loopback_ledgers_byte_identical(self):
        loop_report, _ = _run_transcript_loopback()
        tcp_alice, tcp_bob = _run_transcript_tcp()
        assert tcp_alice == tcp_bob == loop_report

    def test_tcp_peer_disconnect(self):
        ready = threading.Event()
        port_holder = {}

        def server():
            with socket.socket() as listener:
                listener.bind(("127.0.0.1", 0))
                listener.listen(1)
                port_holder["port"] = listener.getsockname()[1]
                ready.set()
                conn, _ = listener.accept()
                conn.close()

        thread = threading.Thread(target=server)
        thread.start()
        ready.wait(5)
        channel = TcpChannel.connect("127.0.0.1", port_holder["port"], role="bob")
        with pytest.raises(ChannelClosedError):
            channel.recv_frame()
        thread.join(5)

    def test_min_request_payload_size_at_1024(self, rng):
        # three ciphertexts in Z_{n^2} at kappa=1024: about 3 * (4 + 256) bytes
        payload = b"".join(
            encode_bigint(rng.getrandbits(2048)) for _ in range(3)
        )
        assert 3 * (4 + 250) <= len(payload) <= 3 * (4 + 256)
