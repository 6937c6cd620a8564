"""Bit-exact message framing and the two interchangeable channels.

A frame is a 1-byte tag, a 4-byte big-endian payload length, and the
payload.  Big integers inside payloads are minimal-length big-endian byte
strings behind their own 4-byte big-endian length prefix.  The loopback
channel (in-process queue pair) and the TCP channel carry identical bytes,
so a session transcript produces the same byte ledger on either.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass

from .errors import ChannelClosedError, FramingError, InputError

TAG_PUBLIC_KEY = 0x01
TAG_DIST_MATRIX = 0x02
TAG_MIN_REQUEST = 0x03
TAG_MIN_RESPONSE = 0x04
TAG_FINAL_REQUEST = 0x05
TAG_FINAL_RESPONSE = 0x06
TAG_SESSION_CONFIG = 0x07

TAG_NAMES = {
    TAG_PUBLIC_KEY: "PublicKey",
    TAG_DIST_MATRIX: "DistMatrix",
    TAG_MIN_REQUEST: "MinRequest",
    TAG_MIN_RESPONSE: "MinResponse",
    TAG_FINAL_REQUEST: "FinalRequest",
    TAG_FINAL_RESPONSE: "FinalResponse",
    TAG_SESSION_CONFIG: "SessionConfig",
}

ROLE_ALICE = "alice"
ROLE_BOB = "bob"

_FRAME_HEADER = struct.Struct(">BI")
_LENGTH_PREFIX = struct.Struct(">I")

# Generous cap: a 1000x52 ciphertext matrix at kappa=3072 is ~40 MiB.
MAX_PAYLOAD_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class Frame:
    tag: int
    payload: bytes


def encode_bigint(v: int) -> bytes:
    """Length-prefixed minimal big-endian encoding of a nonnegative int."""
    if v < 0:
        raise InputError("cannot encode negative integer")
    raw = v.to_bytes(max(1, (v.bit_length() + 7) // 8), "big")
    return _LENGTH_PREFIX.pack(len(raw)) + raw


def decode_bigint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Read one length-prefixed integer; returns (value, next offset)."""
    end = offset + _LENGTH_PREFIX.size
    if end > len(data):
        raise FramingError("truncated length prefix")
    (length,) = _LENGTH_PREFIX.unpack_from(data, offset)
    if end + length > len(data):
        raise FramingError("truncated integer body")
    return int.from_bytes(data[end : end + length], "big"), end + length


def encode_frame(frame: Frame) -> bytes:
    if frame.tag not in TAG_NAMES:
        raise FramingError(f"unknown frame tag 0x{frame.tag:02x}")
    if len(frame.payload) > MAX_PAYLOAD_BYTES:
        raise FramingError(f"payload of {len(frame.payload)} bytes exceeds cap")
    return _FRAME_HEADER.pack(frame.tag, len(frame.payload)) + frame.payload


def frame_wire_size(frame: Frame) -> int:
    return _FRAME_HEADER.size + len(frame.payload)


class ByteLedger:
    """Per-direction, per-tag accounting of frames and bytes on the wire."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.bytes_by = {ROLE_ALICE: 0, ROLE_BOB: 0}
        self.frames_by_tag: dict[tuple[str, int], int] = {}
        self.bytes_by_tag: dict[tuple[str, int], int] = {}

    def record(self, sender: str, tag: int, wire_bytes: int) -> None:
        with self._lock:
            self.bytes_by[sender] += wire_bytes
            key = (sender, tag)
            self.frames_by_tag[key] = self.frames_by_tag.get(key, 0) + 1
            self.bytes_by_tag[key] = self.bytes_by_tag.get(key, 0) + wire_bytes

    @property
    def total_bytes(self) -> int:
        return self.bytes_by[ROLE_ALICE] + self.bytes_by[ROLE_BOB]

    def frame_count(self, tag: int) -> int:
        return sum(n for (_, t), n in self.frames_by_tag.items() if t == tag)

    def report(self) -> dict:
        """Summary: totals, Bob's share of the traffic, per-tag breakdown."""
        total = self.total_bytes
        per_tag = {}
        for (sender, tag), nbytes in sorted(self.bytes_by_tag.items()):
            name = TAG_NAMES[tag]
            entry = per_tag.setdefault(name, {"frames": 0, "bytes": 0})
            entry["frames"] += self.frames_by_tag[(sender, tag)]
            entry["bytes"] += nbytes
        return {
            "bytes_total": total,
            "bytes_alice": self.bytes_by[ROLE_ALICE],
            "bytes_bob": self.bytes_by[ROLE_BOB],
            "bob_fraction": self.bytes_by[ROLE_BOB] / total if total else 0.0,
            "per_tag": per_tag,
        }


def _peer_role(role: str) -> str:
    return ROLE_BOB if role == ROLE_ALICE else ROLE_ALICE


class LoopbackChannel:
    """One endpoint of an in-process duplex queue pair.

    Both endpoints keep their own ledger, mirroring what two TCP endpoints
    would each observe, so either side's ledger describes the full session.
    """

    def __init__(self, role: str, outbox: queue.Queue, inbox: queue.Queue,
                 timeout: float | None = 300.0) -> None:
        self.role = role
        self.ledger = ByteLedger()
        self._outbox = outbox
        self._inbox = inbox
        self._timeout = timeout
        self._closed = False

    @classmethod
    def pair(cls, timeout: float | None = 300.0) -> tuple["LoopbackChannel", "LoopbackChannel"]:
        """Returns the (alice, bob) ends of a fresh duplex channel."""
        a_to_b: queue.Queue = queue.Queue()
        b_to_a: queue.Queue = queue.Queue()
        alice = cls(ROLE_ALICE, outbox=a_to_b, inbox=b_to_a, timeout=timeout)
        bob = cls(ROLE_BOB, outbox=b_to_a, inbox=a_to_b, timeout=timeout)
        return alice, bob

    def send_frame(self, frame: Frame) -> None:
        if self._closed:
            raise ChannelClosedError("channel closed")
        data = encode_frame(frame)  # validates tag and size
        self.ledger.record(self.role, frame.tag, len(data))
        self._outbox.put(frame)

    def recv_frame(self) -> Frame:
        if self._closed:
            raise ChannelClosedError("channel closed")
        try:
            frame = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise ChannelClosedError("timed out waiting for peer") from None
        if frame is None:
            raise ChannelClosedError("peer closed the channel")
        self.ledger.record(_peer_role(self.role), frame.tag, frame_wire_size(frame))
        return frame

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


class TcpChannel:
    """Frame transport over a connected TCP socket."""

    def __init__(self, sock: socket.socket, role: str) -> None:
        self.role = role
        self.ledger = ByteLedger()
        self._sock = sock
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    @classmethod
    def connect(cls, host: str, port: int, role: str, timeout: float = 30.0,
                retry_for: float = 5.0) -> "TcpChannel":
        """Connect, retrying refused connections for a short window so the
        two sides do not need to be started in a strict order."""
        deadline = time.monotonic() + retry_for
        while True:
            try:
                sock = socket.create_connection((host, port), timeout=timeout)
                break
            except ConnectionRefusedError as exc:
                if time.monotonic() >= deadline:
                    raise ChannelClosedError(
                        f"connect to {host}:{port} failed: {exc}"
                    ) from exc
                time.sleep(0.1)
            except OSError as exc:
                raise ChannelClosedError(f"connect to {host}:{port} failed: {exc}") from exc
        sock.settimeout(None)
        return cls(sock, role)

    @classmethod
    def listen_accept(cls, host: str, port: int, role: str, timeout: float = 120.0) -> "TcpChannel":
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
            server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            server.bind((host, port))
            server.listen(1)
            server.settimeout(timeout)
            try:
                sock, _ = server.accept()
            except socket.timeout:
                raise ChannelClosedError("no peer connected before timeout") from None
        sock.settimeout(None)
        return cls(sock, role)

    def _recv_exact(self, count: int) -> bytes:
        chunks = []
        remaining = count
        while remaining:
            try:
                chunk = self._sock.recv(min(remaining, 1 << 20))
            except OSError as exc:
                raise ChannelClosedError(f"socket error: {exc}") from exc
            if not chunk:
                raise ChannelClosedError("peer closed the connection")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def send_frame(self, frame: Frame) -> None:
        data = encode_frame(frame)
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ChannelClosedError(f"socket error: {exc}") from exc
        self.ledger.record(self.role, frame.tag, len(data))

    def recv_frame(self) -> Frame:
        header = self._recv_exact(_FRAME_HEADER.size)
        tag, length = _FRAME_HEADER.unpack(header)
        if tag not in TAG_NAMES:
            raise FramingError(f"unknown frame tag 0x{tag:02x}")
        if length > MAX_PAYLOAD_BYTES:
            raise FramingError(f"announced payload of {length} bytes exceeds cap")
        payload = self._recv_exact(length) if length else b""
        frame = Frame(tag, payload)
        self.ledger.record(_peer_role(self.role), tag, frame_wire_size(frame))
        return frame

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
