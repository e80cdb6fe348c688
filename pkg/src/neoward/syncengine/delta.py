"""Sync deltas: computation from the store, compression, conflict rules.

A delta is the latest state of one record, tagged with the store cursor
of its final mutation; a push batch is a JSON-lines document wrapped in
a raw Deflate stream with a one-byte prelude recording the window bits.
"""

from __future__ import annotations

import base64
import json
import zlib
from dataclasses import dataclass
from typing import List, Tuple

from ..gateway.store import Store, StoredRecord, UnknownCursorError

__all__ = [
    "SyncDelta",
    "DeltaError",
    "ChecksumMismatch",
    "UnknownCursorError",
    "compute_delta",
    "compress_payload",
    "decompress_payload",
    "resolve_conflict",
]

DEFAULT_WINDOW_BITS = 15  # 32 KiB sliding window
_MIN_WBITS, _MAX_WBITS = 9, 15


class DeltaError(ValueError):
    pass


class ChecksumMismatch(DeltaError):
    pass


@dataclass(frozen=True)
class SyncDelta:
    kind: str
    device_id: int
    record_id: str
    version: int
    t_ms: int
    cursor: int
    payload: bytes
    checksum: int

    @property
    def entity_key(self) -> Tuple[str, int, str]:
        return (self.kind, self.device_id, self.record_id)

    def verify(self) -> None:
        if zlib.crc32(self.payload) != self.checksum:
            raise ChecksumMismatch(f"checksum mismatch for {self.entity_key}")

    @classmethod
    def from_record(cls, record: StoredRecord) -> "SyncDelta":
        return cls(
            kind=record.kind,
            device_id=record.device_id,
            record_id=record.record_id,
            version=record.version,
            t_ms=record.t_ms,
            cursor=record.cursor,
            payload=record.payload,
            checksum=record.checksum,
        )


def compute_delta(store: Store, last_cursor: int) -> List[SyncDelta]:
    """Latest version of every record mutated after the acked cursor, in
    mutation order.  Raises UnknownCursorError when the cursor is ahead
    of the store (caller resets and resyncs from zero)."""
    return [SyncDelta.from_record(r) for r in store.records_after(last_cursor)]


def _delta_to_json(delta: SyncDelta) -> dict:
    return {
        "kind": delta.kind,
        "device_id": str(delta.device_id),
        "record_id": delta.record_id,
        "version": delta.version,
        "t_ms": delta.t_ms,
        "cursor": delta.cursor,
        "payload": base64.b64encode(delta.payload).decode("ascii"),
        "checksum": delta.checksum,
    }


def _delta_from_json(doc: dict) -> SyncDelta:
    return SyncDelta(
        kind=doc["kind"],
        device_id=int(doc["device_id"]),
        record_id=doc["record_id"],
        version=int(doc["version"]),
        t_ms=int(doc["t_ms"]),
        cursor=int(doc["cursor"]),
        payload=base64.b64decode(doc["payload"]),
        checksum=int(doc["checksum"]),
    )


def serialize_batch(deltas: List[SyncDelta]) -> bytes:
    return "\n".join(json.dumps(_delta_to_json(d), sort_keys=True) for d in deltas).encode()


def compress_payload(deltas: List[SyncDelta], window_bits: int = DEFAULT_WINDOW_BITS) -> bytes:
    if not deltas:
        raise DeltaError("empty delta batch")
    if not _MIN_WBITS <= window_bits <= _MAX_WBITS:
        raise DeltaError(f"window_bits must lie in [{_MIN_WBITS}, {_MAX_WBITS}]")
    comp = zlib.compressobj(level=6, method=zlib.DEFLATED, wbits=-window_bits)
    body = comp.compress(serialize_batch(deltas)) + comp.flush()
    return bytes([window_bits]) + body


def decompress_payload(blob: bytes) -> List[SyncDelta]:
    if len(blob) < 2:
        raise DeltaError("truncated batch")
    window_bits = blob[0]
    if not _MIN_WBITS <= window_bits <= _MAX_WBITS:
        raise DeltaError(f"bad window prelude {window_bits}")
    try:
        text = zlib.decompress(blob[1:], wbits=-window_bits).decode("utf-8")
        return [_delta_from_json(json.loads(line)) for line in text.splitlines() if line]
    except (zlib.error, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DeltaError(f"undecodable batch: {exc}") from exc


def resolve_conflict(local: SyncDelta, remote: SyncDelta) -> SyncDelta:
    """Pick the surviving copy of one entity.

    Later mutation timestamp wins; timestamp ties fall to the higher
    version; full ties keep the server-side copy.  Because a record's
    content is a function of (entity, version), the winner is the same
    whichever side supplies which argument.
    """
    if local.entity_key != remote.entity_key:
        raise DeltaError(f"conflict across entities {local.entity_key} vs {remote.entity_key}")
    if (local.t_ms, local.version) > (remote.t_ms, remote.version):
        return local
    return remote
