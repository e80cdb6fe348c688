"""Seeded network impairment: latency and message loss around any client."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..clock import Clock, SimClock

LATENCY_FLOOR_MS = 50.0
LATENCY_CEIL_MS = 2000.0
LOSS_CEIL = 0.30


class LinkTimeout(ConnectionError):
    """The request or its response was lost."""


@dataclass(frozen=True)
class NetworkCondition:
    latency_lo_ms: float = LATENCY_FLOOR_MS
    latency_hi_ms: float = LATENCY_CEIL_MS
    loss: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not LATENCY_FLOOR_MS <= self.latency_lo_ms <= self.latency_hi_ms <= LATENCY_CEIL_MS:
            raise ValueError(
                f"latency range must lie within [{LATENCY_FLOOR_MS}, {LATENCY_CEIL_MS}] ms"
            )
        if not 0.0 <= self.loss <= LOSS_CEIL:
            raise ValueError(f"loss must lie in [0, {LOSS_CEIL}]")


class ImpairedLink:
    """Wraps a sync client; every leg pays a sampled latency and may drop.

    A dropped request never reaches the server; a dropped response leaves
    the server-side effect applied, which is exactly the case that forces
    at-least-once retries plus server-side dedup.
    """

    def __init__(self, inner, condition: NetworkCondition, clock: Clock | None = None):
        self.inner = inner
        self.condition = condition
        self.clock = clock or SimClock()
        self._rng = np.random.default_rng(condition.seed)
        self.lost_requests = 0
        self.lost_responses = 0

    def _leg(self) -> bool:
        """Advance the clock one leg; returns False when the message drops."""
        self.clock.sleep_ms(float(self._rng.uniform(self.condition.latency_lo_ms, self.condition.latency_hi_ms)))
        return float(self._rng.random()) >= self.condition.loss

    def _call(self, fn, *args):
        if not self._leg():
            self.lost_requests += 1
            raise LinkTimeout("request lost")
        result = fn(*args)
        if not self._leg():
            self.lost_responses += 1
            raise LinkTimeout("response lost")
        return result

    def push(self, blob: bytes) -> dict:
        return self._call(self.inner.push, blob)

    def cursor(self) -> int:
        return self._call(self.inner.cursor)

    def checksum(self) -> str:
        return self._call(self.inner.checksum)
