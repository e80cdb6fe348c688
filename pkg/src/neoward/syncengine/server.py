"""Mock aggregation server: FIFO apply, dedup, digest; HTTP wrapper."""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Dict, Optional, Set, Tuple

from fastapi import FastAPI, HTTPException, Request

from .delta import ChecksumMismatch, DeltaError, SyncDelta, decompress_payload, resolve_conflict


class BatchRejected(ValueError):
    """Whole-batch rejection; nothing was applied."""


class AggregationState:
    """Server-side sync state: applied entities keyed by (kind, device, id)."""

    def __init__(self, state_path: Optional[Path] = None):
        self._entities: Dict[Tuple[str, int, str], SyncDelta] = {}
        self._seen: Set[Tuple[Tuple[str, int, str], int]] = set()
        self._cursor = 0
        self._lock = threading.Lock()
        self._state_path = Path(state_path) if state_path else None
        if self._state_path and self._state_path.exists():
            self._load()

    # -- protocol -------------------------------------------------------------

    def push(self, blob: bytes) -> dict:
        try:
            deltas = decompress_payload(blob)
        except DeltaError as exc:
            raise BatchRejected(f"undecodable batch: {exc}") from exc
        if not deltas:
            raise BatchRejected("empty batch")

        cursors = [d.cursor for d in deltas]
        if any(b <= a for a, b in zip(cursors, cursors[1:])):
            raise BatchRejected("batch cursors must strictly ascend (FIFO)")
        try:
            for delta in deltas:
                delta.verify()
        except ChecksumMismatch as exc:
            raise BatchRejected(str(exc)) from exc

        applied = deduped = 0
        with self._lock:
            for delta in deltas:
                token = (delta.entity_key, delta.version)
                if token in self._seen:
                    deduped += 1
                    continue
                self._seen.add(token)
                existing = self._entities.get(delta.entity_key)
                if existing is None:
                    self._entities[delta.entity_key] = delta
                else:
                    self._entities[delta.entity_key] = resolve_conflict(delta, existing)
                applied += 1
            self._cursor = max(self._cursor, cursors[-1])
            self._persist()
        return {"cursor": self._cursor, "applied": applied, "deduped": deduped}

    def cursor(self) -> int:
        with self._lock:
            return self._cursor

    def checksum(self) -> str:
        """Whole-state digest; matches the gateway store's digest formula."""
        with self._lock:
            items = sorted(
                (d.kind, d.device_id, d.record_id, d.version, d.checksum)
                for d in self._entities.values()
            )
        h = hashlib.sha256()
        for item in items:
            h.update(repr(item).encode())
        return h.hexdigest()

    def entity_count(self) -> int:
        with self._lock:
            return len(self._entities)

    # -- persistence ------------------------------------------------------------

    def _persist(self) -> None:
        if self._state_path is None:
            return
        doc = {
            "cursor": self._cursor,
            "entities": [
                {
                    "kind": d.kind,
                    "device_id": str(d.device_id),
                    "record_id": d.record_id,
                    "version": d.version,
                    "t_ms": d.t_ms,
                    "cursor": d.cursor,
                    "payload": d.payload.hex(),
                    "checksum": d.checksum,
                }
                for d in self._entities.values()
            ],
            "seen": [[list(k), v] for k, v in self._seen],
        }
        tmp = self._state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.replace(self._state_path)

    def _load(self) -> None:
        doc = json.loads(self._state_path.read_text())
        self._cursor = doc["cursor"]
        for e in doc["entities"]:
            delta = SyncDelta(
                kind=e["kind"],
                device_id=int(e["device_id"]),
                record_id=e["record_id"],
                version=e["version"],
                t_ms=e["t_ms"],
                cursor=e["cursor"],
                payload=bytes.fromhex(e["payload"]),
                checksum=e["checksum"],
            )
            self._entities[delta.entity_key] = delta
        for key, version in doc["seen"]:
            kind, device_id, record_id = key
            self._seen.add(((kind, int(device_id), record_id), version))


class DirectClient:
    """In-process client speaking the same protocol as the HTTP one."""

    def __init__(self, state: AggregationState):
        self.state = state

    def push(self, blob: bytes) -> dict:
        return self.state.push(blob)

    def cursor(self) -> int:
        return self.state.cursor()

    def checksum(self) -> str:
        return self.state.checksum()


def create_mock_server(state: AggregationState) -> FastAPI:
    """FastAPI wrapper exposing the aggregation endpoints."""
    app = FastAPI(title="neoward mock aggregation server")

    @app.post("/api/sync/push")
    async def push(request: Request):
        blob = await request.body()
        try:
            return state.push(blob)
        except BatchRejected as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/api/sync/cursor")
    def cursor():
        return {"cursor": state.cursor()}

    @app.get("/api/sync/checksum")
    def checksum():
        return {"digest": state.checksum()}

    return app


class HttpSyncClient:
    """httpx-based client for a remote aggregation server.

    Transport-level failures surface as LinkTimeout so the sync engine
    retries them like any other lost message.
    """

    def __init__(self, base_url: str, client=None):
        import httpx

        self._httpx = httpx
        self._http = client or httpx.Client(base_url=base_url, timeout=30.0)

    def _send(self, method: str, path: str, content: Optional[bytes] = None):
        from .netsim import LinkTimeout

        try:
            resp = self._http.request(method, path, content=content)
        except self._httpx.HTTPError as exc:
            raise LinkTimeout(f"{method} {path}: {exc}") from exc
        if resp.status_code == 422:
            raise BatchRejected(resp.json().get("detail", "rejected"))
        resp.raise_for_status()
        return resp.json()

    def push(self, blob: bytes) -> dict:
        return self._send("POST", "/api/sync/push", content=blob)

    def cursor(self) -> int:
        return self._send("GET", "/api/sync/cursor")["cursor"]

    def checksum(self) -> str:
        return self._send("GET", "/api/sync/checksum")["digest"]
