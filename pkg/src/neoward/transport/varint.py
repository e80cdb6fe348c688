"""LEB128-style unsigned varints and zigzag mapping for signed deltas."""

from __future__ import annotations


class VarintError(ValueError):
    """Truncated or malformed varint stream."""


def encode_uvarint(value: int, out: bytearray) -> None:
    if value < 0:
        raise VarintError("uvarint requires a non-negative value")
    while value >= 0x80:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


def decode_uvarint(buf: bytes, pos: int) -> tuple[int, int]:
    """Decode one uvarint at `pos`; returns (value, next_pos)."""
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise VarintError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise VarintError("varint too long")


def zigzag(n: int) -> int:
    return n << 1 if n >= 0 else ((-n) << 1) - 1


def unzigzag(z: int) -> int:
    return z >> 1 if not z & 1 else -((z + 1) >> 1)


def encode_svarint(value: int, out: bytearray) -> None:
    encode_uvarint(zigzag(value), out)


def decode_svarint(buf: bytes, pos: int) -> tuple[int, int]:
    z, pos = decode_uvarint(buf, pos)
    return unzigzag(z), pos
