"""Ward gateway core: frame ingestion, persistence, sessions, fanout.

Vitals frames land on the critical ring and drain straight into the
store, the alert engine and any live stream subscribers; static-features
frames collect on a batch queue flushed on a configurable period.  The
service runs inline (callers drain synchronously, deterministic for
tests) or with a consumer thread (live mode).
"""

from __future__ import annotations

import itertools
import json
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..alerts.engine import AlertEngine
from ..clock import Clock, RealClock
from ..transport.frame import TYPE_STATIC, TYPE_VITALS, FrameReceiver, TransportError
from ..transport import batchcodec
from ..vitalsim.scenario import VitalSample
from .ring import RingBuffer
from .store import (
    KIND_ANNOTATION,
    KIND_DEVICE_META,
    KIND_SESSION,
    KIND_VITAL,
    Store,
    pack_vital,
)


class SessionConflict(Exception):
    """A KMC session is already active for the device."""


class SessionNotFound(KeyError):
    pass


@dataclass
class KmcSession:
    session_id: str
    device_id: int
    start_ms: int
    initiator: str
    end_ms: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "device_id": str(self.device_id),
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "initiator": self.initiator,
        }


@dataclass
class DeviceState:
    device_id: int
    last_seen_ms: Optional[int] = None
    category: str = "term"
    active_session: Optional[str] = None


@dataclass
class IngestMetrics:
    frames: int = 0
    rejects: int = 0
    samples: int = 0
    static_frames: int = 0
    # bounded: p99 is computed over the most recent window
    latencies_ms: deque = field(default_factory=lambda: deque(maxlen=100_000))

    def p99_latency_ms(self) -> float:
        if not self.latencies_ms:
            return 0.0
        ordered = sorted(self.latencies_ms)
        return ordered[min(len(ordered) - 1, int(0.99 * len(ordered)))]


def sample_to_json(sample: VitalSample) -> dict:
    return {
        "device_id": str(sample.device_id),
        "t_ms": sample.t_ms,
        "hr": sample.hr,
        "spo2": sample.spo2,
        "rr": sample.rr,
        "temp": sample.temp,
        "motion": sample.motion,
        "flags": sample.flags,
    }


class GatewayService:
    def __init__(
        self,
        store: Store,
        receiver: FrameReceiver,
        alert_engine: Optional[AlertEngine] = None,
        clock: Optional[Clock] = None,
        ring_capacity: int = 1024,
        batch_flush_s: float = 60.0,
        threaded: bool = False,
    ):
        self.store = store
        self.receiver = receiver
        self.alerts = alert_engine or AlertEngine()
        self.clock = clock or RealClock()
        self.ring = RingBuffer(ring_capacity)
        self.batch_flush_ms = batch_flush_s * 1000.0
        self.metrics = IngestMetrics()
        self.threaded = threaded
        self.sync_controller = None  # attached by the sync engine

        self._static_queue: List[dict] = []
        self._static_deadline = self.clock.now_ms() + self.batch_flush_ms
        self._devices: Dict[int, DeviceState] = {}
        self._sessions: Dict[str, KmcSession] = {}
        self._session_ids = itertools.count(1)
        self._subscribers: List[queue.Queue] = []
        self._store_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._stop = threading.Event()
        self._consumer: Optional[threading.Thread] = None
        self._recover_sessions()

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "GatewayService":
        if self.threaded and self._consumer is None:
            self._consumer = threading.Thread(target=self._drain_loop, daemon=True)
            self._consumer.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._consumer is not None:
            self._consumer.join(timeout=5)
            self._consumer = None
        self._drain()  # whatever is left
        self.flush_static()
        self.store.flush()

    # -- ingestion -----------------------------------------------------------

    def ingest(self, frame_bytes: bytes) -> int:
        """Receive one wire frame; returns samples stored (vitals) or 0."""
        t0 = time.perf_counter()
        try:
            frame, plaintext = self.receiver.receive(frame_bytes)
        except TransportError:
            self.metrics.rejects += 1
            return 0

        if frame.frame_type == TYPE_VITALS:
            try:
                samples = batchcodec.decode_batch(plaintext, frame.device_id)
            except batchcodec.BatchError:
                self.metrics.rejects += 1
                return 0
            for sample in samples:
                self.ring.push(sample)
            self.metrics.frames += 1
            count = len(samples)
            if not self.threaded:
                self._drain()
            self.metrics.latencies_ms.append((time.perf_counter() - t0) * 1000.0)
            self._maybe_flush_static()
            return count

        if frame.frame_type == TYPE_STATIC:
            try:
                features = json.loads(plaintext.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self.metrics.rejects += 1
                return 0
            self.metrics.static_frames += 1
            self._static_queue.append({"device_id": frame.device_id, "features": features})
            self._maybe_flush_static()
            return 0

        self.metrics.frames += 1
        return 0

    def _drain_loop(self) -> None:
        while not self._stop.is_set():
            worked = self._drain()
            self._maybe_flush_static()  # idle gateways still honor the period
            if not worked:
                time.sleep(0.0005)

    def _drain(self) -> bool:
        """Pop everything currently in the ring into the store; returns
        whether any work happened."""
        worked = False
        while True:
            sample = self.ring.pop()
            if sample is None:
                break
            worked = True
            self._persist_sample(sample)
        if worked:
            self.store.flush()
        return worked

    def _persist_sample(self, sample: VitalSample) -> None:
        with self._store_lock:
            self.store.append(
                KIND_VITAL, sample.device_id, str(sample.t_ms), sample.t_ms, pack_vital(sample)
            )
        self.metrics.samples += 1
        with self._state_lock:
            state = self._devices.setdefault(sample.device_id, DeviceState(sample.device_id))
            state.last_seen_ms = self.clock.now_ms()
        self._publish({"type": "vitals", "sample": sample_to_json(sample)})
        for alert in self.alerts.process_sample(sample):
            self._publish({"type": "alert", "alert": alert_to_json(alert)})

    def _maybe_flush_static(self) -> None:
        if self.clock.now_ms() >= self._static_deadline:
            self.flush_static()

    def flush_static(self) -> int:
        """Flush the static-features batch queue into device-meta records."""
        flushed = 0
        batch, self._static_queue = self._static_queue, []
        now = self.clock.now_ms()
        with self._store_lock:
            for item in batch:
                self.store.append(
                    KIND_DEVICE_META,
                    item["device_id"],
                    "static-features",
                    now,
                    json.dumps(item["features"], sort_keys=True).encode(),
                )
                flushed += 1
            if flushed:
                self.store.flush()
        self._static_deadline = now + self.batch_flush_ms
        return flushed

    # -- live stream ----------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=4096)
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    def _publish(self, message: dict) -> None:
        for q in list(self._subscribers):
            try:
                q.put_nowait(message)
            except queue.Full:
                pass  # slow subscriber loses messages, ingestion never blocks

    def publish_sync(self, status: dict) -> None:
        self._publish({"type": "sync", "status": status})

    # -- devices and sessions ---------------------------------------------------

    def set_category(self, device_id: int, category: str) -> None:
        self.alerts.set_category(device_id, category)
        with self._state_lock:
            state = self._devices.setdefault(device_id, DeviceState(device_id))
            state.category = category
        with self._store_lock:
            self.store.append(
                KIND_DEVICE_META, device_id, "category", self.clock.now_ms(), category.encode()
            )

    def devices(self) -> List[DeviceState]:
        with self._state_lock:
            return sorted(self._devices.values(), key=lambda d: d.device_id)

    def add_annotation(self, device_id: int, text: str, author: str) -> str:
        now = self.clock.now_ms()
        record_id = f"a-{now}-{author}"
        payload = json.dumps({"text": text, "author": author, "t_ms": now}, sort_keys=True)
        with self._store_lock:
            self.store.append(KIND_ANNOTATION, device_id, record_id, now, payload.encode())
            self.store.flush()
        return record_id

    def _recover_sessions(self) -> None:
        for record in self.store.records(KIND_SESSION):
            data = json.loads(record.payload.decode())
            session = KmcSession(
                session_id=data["session_id"],
                device_id=int(data["device_id"]),
                start_ms=data["start_ms"],
                end_ms=data["end_ms"],
                initiator=data["initiator"],
            )
            self._sessions[session.session_id] = session
            if session.end_ms is None:
                state = self._devices.setdefault(session.device_id, DeviceState(session.device_id))
                state.active_session = session.session_id

    def session_start(self, device_id: int, user: str) -> KmcSession:
        with self._state_lock:
            state = self._devices.setdefault(device_id, DeviceState(device_id))
            if state.active_session is not None:
                raise SessionConflict(f"device {device_id} already in session {state.active_session}")
            session = KmcSession(
                session_id=f"s-{next(self._session_ids)}-{device_id}",
                device_id=device_id,
                start_ms=self.clock.now_ms(),
                initiator=user,
            )
            state.active_session = session.session_id
            self._sessions[session.session_id] = session
        self._persist_session(session)
        return session

    def session_stop(self, session_id: str) -> KmcSession:
        with self._state_lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise SessionNotFound(session_id)
            if session.end_ms is not None:
                raise SessionConflict(f"session {session_id} already stopped")
            # end must exceed start even under a coarse or frozen clock
            session.end_ms = max(self.clock.now_ms(), session.start_ms + 1)
            state = self._devices.get(session.device_id)
            if state and state.active_session == session_id:
                state.active_session = None
        self._persist_session(session)
        return session

    def _persist_session(self, session: KmcSession) -> None:
        payload = json.dumps(session.to_json(), sort_keys=True).encode()
        with self._store_lock:
            self.store.append(
                KIND_SESSION, session.device_id, session.session_id, self.clock.now_ms(), payload
            )
            self.store.flush()

    def sessions(self) -> List[KmcSession]:
        return sorted(self._sessions.values(), key=lambda s: s.session_id)

    def active_session_of(self, device_id: int) -> Optional[KmcSession]:
        with self._state_lock:
            state = self._devices.get(device_id)
            if state is None or state.active_session is None:
                return None
            return self._sessions.get(state.active_session)

    def get_session(self, session_id: str) -> KmcSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session


def alert_to_json(alert) -> dict:
    return {
        "alert_id": alert.alert_id,
        "device_id": str(alert.device_id),
        "vital": alert.vital,
        "direction": alert.direction,
        "first_t_ms": alert.first_t_ms,
        "last_t_ms": alert.last_t_ms,
        "event_count": alert.event_count,
        "posterior": round(alert.posterior, 6),
        "state": alert.state,
    }
