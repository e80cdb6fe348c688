"""Wall and simulated clocks; everything time-driven takes one of these."""

from __future__ import annotations

import time


class Clock:
    def now_ms(self) -> int:
        raise NotImplementedError

    def sleep_ms(self, ms: float) -> None:
        raise NotImplementedError


class RealClock(Clock):
    def now_ms(self) -> int:
        return int(time.time() * 1000)

    def sleep_ms(self, ms: float) -> None:
        if ms > 0:
            time.sleep(ms / 1000.0)


class SimClock(Clock):
    """Virtual clock: sleeping advances time instantly."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def sleep_ms(self, ms: float) -> None:
        if ms > 0:
            self._now += int(ms)

    def advance(self, ms: float) -> None:
        self.sleep_ms(ms)
