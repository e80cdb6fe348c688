"""Encrypted append-only local store with a rebuildable in-memory index.

One log file per record kind; every entry is AEAD-sealed (AES-256-GCM,
entry header bound as associated data) and CRC-framed.  Reopening scans
each log, drops any torn tail, and rebuilds the index, so a crash loses
at most the writes since the last flush.  A global mutation cursor
orders entries across kinds for delta sync.
"""

from __future__ import annotations

import bisect
import hashlib
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..vitalsim.scenario import VitalSample

KIND_VITAL = "vital"
KIND_ANNOTATION = "annotation"
KIND_SESSION = "session"
KIND_DEVICE_META = "device-meta"
RECORD_KINDS = (KIND_VITAL, KIND_ANNOTATION, KIND_SESSION, KIND_DEVICE_META)

_KIND_CODE = {k: i for i, k in enumerate(RECORD_KINDS, start=1)}
_CODE_KIND = {i: k for k, i in _KIND_CODE.items()}

# cursor u64, version u32, kind u8, device_id u64, t_ms i64, rid_len u16, sealed_len u32
_ENTRY_FIXED = struct.Struct("<QIBQqHI")
_NONCE_LEN = 12
_VITAL_PAYLOAD = struct.Struct("<qiiiiBB")


class StoreError(Exception):
    pass


class UnknownCursorError(StoreError):
    """Cursor beyond anything this store has written; caller must resync."""


@dataclass(frozen=True)
class StoredRecord:
    kind: str
    device_id: int
    record_id: str
    t_ms: int
    version: int
    cursor: int
    payload: bytes

    @property
    def key(self) -> Tuple[str, int, str]:
        return (self.kind, self.device_id, self.record_id)

    @property
    def checksum(self) -> int:
        return zlib.crc32(self.payload)


def pack_vital(sample: VitalSample) -> bytes:
    return _VITAL_PAYLOAD.pack(
        sample.t_ms, sample.hr, sample.spo2, sample.rr, sample.temp, sample.motion, sample.flags
    )


def unpack_vital(device_id: int, payload: bytes) -> VitalSample:
    t_ms, hr, spo2, rr, temp, motion, flags = _VITAL_PAYLOAD.unpack(payload)
    return VitalSample(device_id, t_ms, hr, spo2, rr, temp, motion, flags)


class Store:
    def __init__(self, directory: Path, key: bytes):
        if len(key) != 32:
            raise StoreError("store key must be 32 bytes")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._aead = AESGCM(key)
        self._index: Dict[Tuple[str, int, str], StoredRecord] = {}
        self._log: List[StoredRecord] = []  # mutation order
        self._cursors: List[int] = []  # parallel to _log, ascending
        self._vitals: Dict[int, List[Tuple[int, StoredRecord]]] = {}
        self._next_cursor = 1
        self._files = {}
        self._recover()
        for kind in RECORD_KINDS:
            self._files[kind] = open(self._path(kind), "ab")

    def _path(self, kind: str) -> Path:
        return self.directory / f"{kind}.log"

    # -- persistence --------------------------------------------------------

    def _recover(self) -> None:
        entries: List[Tuple[int, StoredRecord]] = []
        for kind in RECORD_KINDS:
            path = self._path(kind)
            if not path.exists():
                continue
            entries.extend(self._scan(path))
        entries.sort(key=lambda pair: pair[0])
        for cursor, record in entries:
            self._apply(record)
            self._next_cursor = max(self._next_cursor, cursor + 1)

    def _scan(self, path: Path):
        """Yield valid (cursor, record) entries; truncate at the first torn one."""
        raw = path.read_bytes()
        pos = 0
        good = []
        while pos + 4 <= len(raw):
            (entry_len,) = struct.unpack_from("<I", raw, pos)
            start, end = pos + 4, pos + 4 + entry_len
            if end > len(raw):
                break
            entry = raw[start:end]
            record = self._decode_entry(entry)
            if record is None:
                break
            good.append((record.cursor, record))
            pos = end
        if pos < len(raw):
            with open(path, "r+b") as fh:
                fh.truncate(pos)
        return good

    def _decode_entry(self, entry: bytes) -> Optional[StoredRecord]:
        fixed = _ENTRY_FIXED.size
        if len(entry) < fixed + _NONCE_LEN + 4:
            return None
        cursor, version, kind_code, device_id, t_ms, rid_len, sealed_len = _ENTRY_FIXED.unpack_from(entry)
        body_len = fixed + rid_len + _NONCE_LEN + sealed_len
        if kind_code not in _CODE_KIND or len(entry) != body_len + 4:
            return None
        (crc,) = struct.unpack_from("<I", entry, body_len)
        if zlib.crc32(entry[:body_len]) != crc:
            return None
        rid = entry[fixed : fixed + rid_len].decode("utf-8")
        nonce = entry[fixed + rid_len : fixed + rid_len + _NONCE_LEN]
        sealed = entry[fixed + rid_len + _NONCE_LEN : body_len]
        try:
            payload = self._aead.decrypt(nonce, sealed, entry[:fixed + rid_len])
        except InvalidTag:
            return None
        return StoredRecord(_CODE_KIND[kind_code], device_id, rid, t_ms, version, cursor, payload)

    def _write_entry(self, record: StoredRecord) -> None:
        rid = record.record_id.encode("utf-8")
        nonce = os.urandom(_NONCE_LEN)
        header = _ENTRY_FIXED.pack(
            record.cursor,
            record.version,
            _KIND_CODE[record.kind],
            record.device_id,
            record.t_ms,
            len(rid),
            len(record.payload) + 16,  # GCM tag
        ) + rid
        sealed = self._aead.encrypt(nonce, record.payload, header)
        entry = header + nonce + sealed
        entry += struct.pack("<I", zlib.crc32(entry))
        fh = self._files[record.kind]
        fh.write(struct.pack("<I", len(entry)) + entry)

    def flush(self) -> None:
        for fh in self._files.values():
            fh.flush()

    def close(self) -> None:
        for fh in self._files.values():
            fh.flush()
            fh.close()
        self._files = {}

    # -- mutation ------------------------------------------------------------

    def append(self, kind: str, device_id: int, record_id: str, t_ms: int, payload: bytes) -> StoredRecord:
        if kind not in _KIND_CODE:
            raise StoreError(f"unknown record kind {kind!r}")
        key = (kind, device_id, record_id)
        previous = self._index.get(key)
        record = StoredRecord(
            kind=kind,
            device_id=device_id,
            record_id=record_id,
            t_ms=t_ms,
            version=(previous.version + 1) if previous else 1,
            cursor=self._next_cursor,
            payload=bytes(payload),
        )
        self._next_cursor += 1
        self._write_entry(record)
        self._apply(record)
        return record

    def _apply(self, record: StoredRecord) -> None:
        self._index[record.key] = record
        self._log.append(record)
        self._cursors.append(record.cursor)
        if record.kind == KIND_VITAL:
            ts = self._vitals.setdefault(record.device_id, [])
            if ts and record.t_ms < ts[-1][0]:
                # devices emit in time order, but a replayed or repaired
                # stream may not; keep the query index sorted regardless
                bisect.insort(ts, (record.t_ms, record), key=lambda pair: pair[0])
            else:
                ts.append((record.t_ms, record))

    # -- queries -------------------------------------------------------------

    def get(self, kind: str, device_id: int, record_id: str) -> Optional[StoredRecord]:
        return self._index.get((kind, device_id, record_id))

    def query_vitals(self, device_id: int, from_ms: int, to_ms: int) -> List[VitalSample]:
        if from_ms > to_ms:
            raise StoreError("from_ms must be <= to_ms")
        ts = self._vitals.get(device_id, [])
        lo = bisect.bisect_left(ts, (from_ms, ))
        out = []
        for t, record in ts[lo:]:
            if t > to_ms:
                break
            out.append(unpack_vital(device_id, record.payload))
        return out

    def records(self, kind: str) -> List[StoredRecord]:
        return [r for r in self._index.values() if r.kind == kind]

    def latest(self) -> List[StoredRecord]:
        return list(self._index.values())

    @property
    def max_cursor(self) -> int:
        return self._next_cursor - 1

    def records_after(self, cursor: int) -> List[StoredRecord]:
        """Latest version of every record mutated after `cursor`, ordered by
        its final mutation; one entry per record key."""
        if cursor < 0 or cursor > self.max_cursor:
            raise UnknownCursorError(f"cursor {cursor} unknown (max {self.max_cursor})")
        start = bisect.bisect_right(self._cursors, cursor)
        latest: Dict[Tuple[str, int, str], StoredRecord] = {}
        for record in self._log[start:]:
            current = self._index[record.key]
            latest[record.key] = current
        return sorted(latest.values(), key=lambda r: r.cursor)

    def compact_vitals(self, cutoff_ms: int) -> int:
        """Drop vital records older than the cutoff by rewriting the vital
        log; cursors of surviving records are preserved."""
        keep = [r for r in self._log if r.kind != KIND_VITAL or r.t_ms >= cutoff_ms]
        dropped = len(self._log) - len(keep)
        if not dropped:
            return 0
        fh = self._files.pop(KIND_VITAL)
        fh.close()
        self._path(KIND_VITAL).unlink()
        self._index = {}
        self._log = []
        self._cursors = []
        self._vitals = {}
        self._files[KIND_VITAL] = open(self._path(KIND_VITAL), "ab")
        for record in keep:
            if record.kind == KIND_VITAL:
                self._write_entry(record)
            self._apply(record)
        self.flush()
        return dropped

    def digest(self, kinds: Tuple[str, ...] = RECORD_KINDS) -> str:
        """Order-independent digest over latest record versions."""
        items = sorted(
            (r.kind, r.device_id, r.record_id, r.version, r.checksum)
            for r in self._index.values()
            if r.kind in kinds
        )
        h = hashlib.sha256()
        for item in items:
            h.update(repr(item).encode())
        return h.hexdigest()
