"""Temporal clustering of threshold events into alerts.

Greedy rule: an event joins the open cluster iff its gap to the last
member is within the current window; the window starts at the base width
and grows geometrically with every member the cluster absorbs, capped at
a maximum.  Ongoing episodes therefore merge into one alert instead of
re-alarming, which is the point: fewer, denser alerts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, List, Optional

from .thresholds import ThresholdEvent

RAISED = "raised"
ACKNOWLEDGED = "acknowledged"
SUPPRESSED = "suppressed"

_TRANSITIONS = {
    (RAISED, ACKNOWLEDGED),
    (RAISED, SUPPRESSED),
    (ACKNOWLEDGED, SUPPRESSED),
}


class ClusterOrderError(ValueError):
    """Events not ascending in time or not sharing a cluster key."""


class InvalidTransition(ValueError):
    """Alert state machine violation."""


@dataclass(frozen=True)
class ClusterConfig:
    base_window_s: float = 30.0
    growth: float = 1.5
    max_window_s: float = 300.0

    def window_ms(self, cluster_size: int) -> float:
        """Join window for a cluster currently holding `cluster_size` events.

        The width is base * growth^(size - 1) capped at the maximum: a
        singleton admits gaps up to the base window, and each absorbed
        event widens the window by the growth factor.
        """
        if cluster_size < 1:
            raise ValueError("cluster_size must be >= 1")
        w = self.base_window_s * (self.growth ** (cluster_size - 1))
        return min(w, self.max_window_s) * 1000.0


@dataclass
class Alert:
    alert_id: int
    device_id: int
    vital: str
    direction: str
    first_t_ms: int
    last_t_ms: int
    event_count: int
    posterior: float
    state: str = RAISED
    window_ms_at_close: Optional[float] = None
    ack_t_ms: Optional[int] = None
    ack_user: Optional[str] = None
    true_event: bool = False  # any member carried the synthetic-event flag

    def transition(self, new_state: str) -> None:
        if (self.state, new_state) not in _TRANSITIONS:
            raise InvalidTransition(f"{self.state} -> {new_state}")
        self.state = new_state


@dataclass
class ScoredEvent:
    """A threshold event with its false-alarm posterior attached."""

    event: ThresholdEvent
    posterior: float = 0.0


def cluster(
    events: Iterable[ScoredEvent],
    config: ClusterConfig | None = None,
    id_iter: Optional[Iterable[int]] = None,
) -> List[Alert]:
    """Partition ordered same-kind events into alerts by the window rule."""
    cfg = config or ClusterConfig()
    ids = iter(id_iter) if id_iter is not None else itertools.count(1)
    alerts: List[Alert] = []
    current: List[ScoredEvent] = []

    def close():
        if current:
            alerts.append(_finalize(current, cfg, next(ids)))
            current.clear()

    key = None
    last_t = None
    for scored in events:
        ev = scored.event
        if key is None:
            key = (ev.device_id, ev.vital, ev.direction)
        elif (ev.device_id, ev.vital, ev.direction) != key:
            raise ClusterOrderError("events must share device, vital and direction")
        if last_t is not None and ev.t_ms < last_t:
            raise ClusterOrderError("events must be ordered by t_ms")
        last_t = ev.t_ms

        if current and ev.t_ms - current[-1].event.t_ms > cfg.window_ms(len(current)):
            close()
        current.append(scored)
    close()
    return alerts


def _finalize(members: List[ScoredEvent], cfg: ClusterConfig, alert_id: int) -> Alert:
    from ..vitalsim.scenario import FLAG_SYNTHETIC_EVENT

    first = members[0].event
    return Alert(
        alert_id=alert_id,
        device_id=first.device_id,
        vital=first.vital,
        direction=first.direction,
        first_t_ms=first.t_ms,
        last_t_ms=members[-1].event.t_ms,
        event_count=len(members),
        posterior=max(m.posterior for m in members),
        window_ms_at_close=cfg.window_ms(len(members)),
        true_event=any(m.event.flags & FLAG_SYNTHETIC_EVENT for m in members),
    )
