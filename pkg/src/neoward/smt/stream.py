"""Sliding-window streaming inference over a live sample feed."""

from __future__ import annotations

from collections import deque
from typing import Optional

import numpy as np

from ..vitalsim.scenario import VitalSample
from .model import RiskScore, SmtModel


class StreamingInference:
    """Feeds 1 Hz samples through the model one window step at a time.

    Emits nothing until a full window is buffered.  Gaps up to the
    fill limit are forward-filled with the last reading; a longer gap
    degrades the window and inference stays suppressed until the buffer
    refills with fresh samples.
    """

    def __init__(
        self,
        model: SmtModel,
        static: np.ndarray,
        semistatic: np.ndarray,
        max_fill_s: float = 10.0,
    ):
        self.model = model
        self.static = np.asarray(static, dtype=float)
        self.semistatic = np.asarray(semistatic, dtype=float)
        self.max_fill_ms = max_fill_s * 1000.0
        self._window = deque(maxlen=model.cfg.window)
        self._last_t: Optional[int] = None
        self.degraded_resets = 0

    def _vector(self, sample: VitalSample) -> np.ndarray:
        return np.array([sample.hr, sample.spo2, sample.rr, sample.temp], dtype=float) / 100.0

    def feed(self, sample: VitalSample) -> Optional[RiskScore]:
        if self._last_t is not None:
            gap = sample.t_ms - self._last_t
            if gap <= 0:
                raise ValueError("samples must arrive in time order")
            if gap > self.max_fill_ms:
                self._window.clear()
                self.degraded_resets += 1
            elif gap > 1000 and self._window:
                last = self._window[-1]
                for _ in range(int(gap // 1000) - 1):
                    self._window.append(last)
        self._window.append(self._vector(sample))
        self._last_t = sample.t_ms

        if len(self._window) < self.model.cfg.window:
            return None
        window = np.stack(self._window)
        return self.model.risk_score(window, self.static, self.semistatic)
