"""The push cycle: deltas out in FIFO batches, at-least-once with backoff."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..clock import Clock, RealClock
from ..gateway.store import Store, UnknownCursorError
from ..transport.link import ConnectionProfile, next_backoff_ms
from .delta import compress_payload, compute_delta
from .netsim import LinkTimeout
from .server import BatchRejected


@dataclass
class SyncReport:
    pushed: int = 0
    deduped: int = 0
    retries: int = 0
    batches: int = 0
    final_cursor: int = 0
    complete: bool = False
    cursor_reset: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


def sync_once(
    store: Store,
    client,
    last_cursor: int,
    batch_size: int = 100,
    profile: Optional[ConnectionProfile] = None,
    clock: Optional[Clock] = None,
    max_attempts: int = 12,
    window_bits: int = 15,
) -> SyncReport:
    """One sync cycle: push every outstanding delta in cursor order.

    Lost messages are retried with exponential backoff; the server dedups
    on (entity, version), so a batch applied server-side whose ack was
    lost is re-sent harmlessly.  The cursor only ever advances to an
    acknowledged position.
    """
    clock = clock or RealClock()
    profile = profile or ConnectionProfile(device_id=0, backoff_base_ms=50.0, backoff_cap_ms=5000.0)
    report = SyncReport(final_cursor=last_cursor)

    try:
        deltas = compute_delta(store, last_cursor)
    except UnknownCursorError:
        report.cursor_reset = True
        report.final_cursor = 0
        deltas = compute_delta(store, 0)

    for start in range(0, len(deltas), batch_size):
        batch = deltas[start : start + batch_size]
        blob = compress_payload(batch, window_bits)
        acked = False
        for attempt in range(max_attempts):
            try:
                ack = client.push(blob)
            except LinkTimeout:
                report.retries += 1
                clock.sleep_ms(next_backoff_ms(profile, attempt))
                continue
            except BatchRejected:
                # Integrity rejection is not retryable within this cycle.
                return report
            report.pushed += ack["applied"]
            report.deduped += ack["deduped"]
            report.batches += 1
            report.final_cursor = max(report.final_cursor, batch[-1].cursor)
            acked = True
            break
        if not acked:
            return report  # partial: cursor stays at the last acked batch

    report.complete = True
    return report


class SyncController:
    """Gateway-side coordinator: cursor persistence, status, manual trigger."""

    def __init__(
        self,
        store: Store,
        client,
        state_path: Path,
        clock: Optional[Clock] = None,
        gateway=None,
        batch_size: int = 100,
    ):
        self.store = store
        self.client = client
        self.state_path = Path(state_path)
        self.clock = clock or RealClock()
        self.gateway = gateway
        self.batch_size = batch_size
        self._lock = threading.Lock()
        self._running = False
        self.cursor = 0
        self.last_success_ms: Optional[int] = None
        if self.state_path.exists():
            doc = json.loads(self.state_path.read_text())
            self.cursor = doc.get("cursor", 0)
            self.last_success_ms = doc.get("last_success_ms")

    def _persist(self) -> None:
        self.state_path.write_text(
            json.dumps({"cursor": self.cursor, "last_success_ms": self.last_success_ms})
        )

    def pending(self) -> int:
        try:
            return len(self.store.records_after(self.cursor))
        except UnknownCursorError:
            return len(self.store.latest())

    def status(self) -> dict:
        return {
            "configured": True,
            "running": self._running,
            "cursor": self.cursor,
            "last_success_ms": self.last_success_ms,
            "pending": self.pending(),
        }

    def trigger(self) -> dict:
        with self._lock:
            if self._running:
                return {"status": "already-running"}
            self._running = True
        try:
            report = sync_once(
                self.store, self.client, self.cursor, batch_size=self.batch_size, clock=self.clock
            )
            self.cursor = report.final_cursor
            if report.complete:
                self.last_success_ms = self.clock.now_ms()
            self._persist()
            status = {"status": "ok", "report": report.to_json(), **self.status()}
            if self.gateway is not None:
                self.gateway.publish_sync(status)
            return status
        finally:
            self._running = False
