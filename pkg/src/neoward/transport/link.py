"""Connection policies: interval selection, reconnect backoff, channels."""

from __future__ import annotations

import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..clock import Clock, RealClock

CRITICAL_INTERVAL_MS = 7.5
STANDARD_MIN_MS = 50.0
STANDARD_MAX_MS = 400.0
_RSSI_GOOD = -60.0
_RSSI_POOR = -90.0


def connection_interval_ms(priority: str, rssi_dbm: float) -> float:
    """Connection interval from priority and link quality.

    Critical traffic always runs at the tightest interval.  Standard
    traffic maps RSSI linearly: 50 ms at -60 dBm or better, 400 ms at
    -90 dBm or worse.
    """
    if priority == "critical":
        return CRITICAL_INTERVAL_MS
    if priority != "standard":
        raise ValueError(f"unknown priority {priority!r}")
    rssi = min(-40.0, max(-100.0, rssi_dbm))
    if rssi >= _RSSI_GOOD:
        return STANDARD_MIN_MS
    if rssi <= _RSSI_POOR:
        return STANDARD_MAX_MS
    frac = (_RSSI_GOOD - rssi) / (_RSSI_GOOD - _RSSI_POOR)
    return STANDARD_MIN_MS + frac * (STANDARD_MAX_MS - STANDARD_MIN_MS)


@dataclass
class ConnectionProfile:
    """Per-device reconnect tuning; the jitter factor is drawn once per
    profile from the seeded generator so backoff stays monotone."""

    device_id: int
    backoff_base_ms: float = 100.0
    backoff_cap_ms: float = 30000.0
    jitter: float = 0.0
    seed: int = 0
    last_good_interval_ms: Optional[float] = None
    _jitter_u: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        if self.backoff_base_ms > self.backoff_cap_ms:
            raise ValueError("backoff base must not exceed cap")
        if not 0.0 <= self.jitter <= 1.0:
            raise ValueError("jitter must lie in [0, 1]")

    def jitter_u(self) -> float:
        if self._jitter_u is None:
            rng = np.random.default_rng((self.seed, self.device_id))
            self._jitter_u = float(rng.uniform(-0.5, 0.5))
        return self._jitter_u


def next_backoff_ms(profile: ConnectionProfile, attempt: int) -> float:
    """Exponential backoff with a per-profile jitter factor."""
    if attempt < 0:
        raise ValueError("attempt must be >= 0")
    base = min(profile.backoff_base_ms * (2**attempt), profile.backoff_cap_ms)
    if profile.jitter == 0.0:
        return base
    return base * (1.0 + profile.jitter * profile.jitter_u())


class LinkDownError(ConnectionError):
    """Sink failed and retries were exhausted."""


class ReconnectingSink:
    """Wraps a frame sink; retries failed sends with profile backoff."""

    def __init__(
        self,
        inner: Callable[[bytes], None],
        profile: ConnectionProfile,
        clock: Optional[Clock] = None,
        max_attempts: int = 16,
    ):
        self._inner = inner
        self.profile = profile
        self.clock = clock or RealClock()
        self.max_attempts = max_attempts
        self.retries = 0

    def __call__(self, frame_bytes: bytes) -> None:
        for attempt in range(self.max_attempts):
            try:
                self._inner(frame_bytes)
                return
            except Exception:
                self.retries += 1
                if attempt == self.max_attempts - 1:
                    raise LinkDownError(f"send failed after {self.max_attempts} attempts")
                self.clock.sleep_ms(next_backoff_ms(self.profile, attempt))


class InMemoryChannel:
    """Ordered, thread-safe frame queue for tests and in-process wiring."""

    def __init__(self):
        self._frames = deque()
        self._lock = threading.Lock()

    def send(self, frame_bytes: bytes) -> None:
        with self._lock:
            self._frames.append(bytes(frame_bytes))

    __call__ = send

    def recv(self) -> Optional[bytes]:
        with self._lock:
            return self._frames.popleft() if self._frames else None

    def drain(self):
        while True:
            frame = self.recv()
            if frame is None:
                return
            yield frame

    def __len__(self) -> int:
        with self._lock:
            return len(self._frames)


# Minimal local socket binding: 4-byte length prefix per frame over TCP.

class FrameSocketServer:
    def __init__(self, host: str, port: int, handler: Callable[[bytes], None]):
        self._handler = handler
        self._srv = socket.create_server((host, port))
        self.port = self._srv.getsockname()[1]
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> "FrameSocketServer":
        self._thread.start()
        return self

    def _accept_loop(self):
        self._srv.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, _ = self._srv.accept()
            except socket.timeout:
                continue
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn: socket.socket):
        with conn:
            while not self._stop.is_set():
                head = _recv_exact(conn, 4)
                if head is None:
                    return
                (length,) = struct.unpack("<I", head)
                body = _recv_exact(conn, length)
                if body is None:
                    return
                self._handler(body)

    def close(self):
        self._stop.set()
        self._thread.join(timeout=2)
        self._srv.close()


class FrameSocketSink:
    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))

    def __call__(self, frame_bytes: bytes) -> None:
        self._sock.sendall(struct.pack("<I", len(frame_bytes)) + frame_bytes)

    def close(self):
        self._sock.close()


def _recv_exact(conn: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        try:
            chunk = conn.recv(n - len(buf))
        except (socket.timeout, OSError):
            return None
        if not chunk:
            return None
        buf += chunk
    return buf
