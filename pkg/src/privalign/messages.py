"""Payload schemas for each protocol frame.

SessionConfig carries everything the parties must agree on before any
ciphertext moves: protocol version, key size, the sender's sequence
length, edit costs, substitution model, alphabet size, and the masking
caps.  All multi-byte integers are big-endian; arbitrary-precision values
use the shared length-prefixed encoding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import FramingError, InputError
from .paillier import Ciphertext, PublicKey
from .transport import decode_bigint, encode_bigint

PROTOCOL_VERSION = 1

_CONFIG = struct.Struct(">BIIIIBIIIQI")
_MATRIX_HEADER = struct.Struct(">II")

_U32_MAX = 0xFFFFFFFF


@dataclass(frozen=True)
class SessionConfigWire:
    """Negotiated parameters as they appear on the wire."""

    version: int
    kappa: int
    seq_len: int
    c_ins: int
    c_del: int
    model_id: int
    model_p1: int
    model_p2: int
    alphabet_size: int
    rho_max: int
    delta2_bits: int


def pack_session_config(cfg: SessionConfigWire) -> bytes:
    for name in ("kappa", "seq_len", "c_ins", "c_del", "model_p1", "model_p2",
                 "alphabet_size", "delta2_bits"):
        if not 0 <= getattr(cfg, name) <= _U32_MAX:
            raise InputError(f"session config field {name} out of range")
    return _CONFIG.pack(
        cfg.version, cfg.kappa, cfg.seq_len, cfg.c_ins, cfg.c_del,
        cfg.model_id, cfg.model_p1, cfg.model_p2, cfg.alphabet_size,
        cfg.rho_max, cfg.delta2_bits,
    )


def unpack_session_config(payload: bytes) -> SessionConfigWire:
    if len(payload) != _CONFIG.size:
        raise FramingError(f"session config payload must be {_CONFIG.size} bytes")
    return SessionConfigWire(*_CONFIG.unpack(payload))


def pack_public_key(pk: PublicKey) -> bytes:
    return encode_bigint(pk.n)


def unpack_public_key(payload: bytes) -> PublicKey:
    n, offset = decode_bigint(payload)
    if offset != len(payload):
        raise FramingError("trailing bytes after public key")
    if n < 3 or n % 2 == 0:
        raise FramingError("public modulus must be an odd integer > 1")
    return PublicKey.from_modulus(n)


def pack_dist_matrix(matrix: list[list[Ciphertext]], cols: int) -> bytes:
    rows = len(matrix)
    parts = [_MATRIX_HEADER.pack(rows, cols)]
    for row in matrix:
        if len(row) != cols:
            raise InputError("ragged cost matrix")
        parts.extend(encode_bigint(c.value) for c in row)
    return b"".join(parts)


def unpack_dist_matrix(payload: bytes) -> list[list[Ciphertext]]:
    if len(payload) < _MATRIX_HEADER.size:
        raise FramingError("truncated matrix header")
    rows, cols = _MATRIX_HEADER.unpack_from(payload, 0)
    offset = _MATRIX_HEADER.size
    matrix = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            value, offset = decode_bigint(payload, offset)
            row.append(Ciphertext(value))
        matrix.append(row)
    if offset != len(payload):
        raise FramingError("trailing bytes after cost matrix")
    return matrix


def pack_ciphertexts(cts: tuple[Ciphertext, ...] | list[Ciphertext]) -> bytes:
    return b"".join(encode_bigint(c.value) for c in cts)


def unpack_ciphertexts(payload: bytes, count: int) -> list[Ciphertext]:
    offset = 0
    cts = []
    for _ in range(count):
        value, offset = decode_bigint(payload, offset)
        cts.append(Ciphertext(value))
    if offset != len(payload):
        raise FramingError(f"expected exactly {count} ciphertexts")
    return cts


def pack_int(value: int) -> bytes:
    return encode_bigint(value)


def unpack_int(payload: bytes) -> int:
    value, offset = decode_bigint(payload)
    if offset != len(payload):
        raise FramingError("trailing bytes after integer")
    return value
