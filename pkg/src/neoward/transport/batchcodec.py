"""Columnar delta encoding of vital-sample batches.

Layout: base timestamp (uvarint), count (uvarint), then one column per
field in (t, hr, spo2, rr, temp) order.  Each column is a zigzag-varint
first value followed by zigzag-varint successive deltas; the t column is
relative to the base timestamp.  Motion and flags follow as one raw byte
per sample.  Deltas of slowly varying vitals sit near zero, so most
encode in one or two bytes.
"""

from __future__ import annotations

from typing import List, Sequence

from ..vitalsim.scenario import VitalSample
from .varint import VarintError, decode_svarint, decode_uvarint, encode_svarint, encode_uvarint

# Fixed-width reference layout: 8-byte timestamp + four 4-byte vitals.
BASELINE_BYTES_PER_SAMPLE = 24

_COLUMNS = ("hr", "spo2", "rr", "temp")


class BatchError(ValueError):
    """Batch violates encoder preconditions or is malformed on decode."""


class BatchOrderError(BatchError):
    """Timestamps not strictly increasing."""


class MixedDeviceError(BatchError):
    """Samples from more than one device in a single batch."""


def encode_batch(samples: Sequence[VitalSample]) -> bytes:
    if not samples:
        raise BatchError("empty batch")
    device_id = samples[0].device_id
    for a, b in zip(samples, samples[1:]):
        if b.device_id != device_id:
            raise MixedDeviceError("batch mixes device ids")
        if b.t_ms <= a.t_ms:
            raise BatchOrderError("timestamps must strictly increase")

    out = bytearray()
    base_t = samples[0].t_ms
    encode_uvarint(base_t, out)
    encode_uvarint(len(samples), out)

    _encode_column([s.t_ms - base_t for s in samples], out)
    for field in _COLUMNS:
        _encode_column([getattr(s, field) for s in samples], out)

    for s in samples:
        out.append(s.motion & 0xFF)
    for s in samples:
        out.append(s.flags & 0xFF)
    return bytes(out)


def decode_batch(buf: bytes, device_id: int) -> List[VitalSample]:
    try:
        pos = 0
        base_t, pos = decode_uvarint(buf, pos)
        count, pos = decode_uvarint(buf, pos)
        if count == 0:
            raise BatchError("zero-sample batch")

        t_rel, pos = _decode_column(buf, pos, count)
        columns = {}
        for field in _COLUMNS:
            columns[field], pos = _decode_column(buf, pos, count)

        if pos + 2 * count != len(buf):
            raise BatchError("trailing or missing bytes")
        motion = buf[pos : pos + count]
        flags = buf[pos + count : pos + 2 * count]
    except VarintError as exc:
        raise BatchError(str(exc)) from exc

    return [
        VitalSample(
            device_id=device_id,
            t_ms=base_t + t_rel[i],
            hr=columns["hr"][i],
            spo2=columns["spo2"][i],
            rr=columns["rr"][i],
            temp=columns["temp"][i],
            motion=motion[i],
            flags=flags[i],
        )
        for i in range(count)
    ]


def _encode_column(values: Sequence[int], out: bytearray) -> None:
    encode_svarint(values[0], out)
    for prev, cur in zip(values, values[1:]):
        encode_svarint(cur - prev, out)


def _decode_column(buf: bytes, pos: int, count: int) -> tuple[List[int], int]:
    first, pos = decode_svarint(buf, pos)
    values = [first]
    for _ in range(count - 1):
        delta, pos = decode_svarint(buf, pos)
        values.append(values[-1] + delta)
    return values, pos


def compression_ratio(samples: Sequence[VitalSample]) -> float:
    """Encoded size over the fixed-width baseline (lower is better)."""
    return len(encode_batch(samples)) / (BASELINE_BYTES_PER_SAMPLE * len(samples))
