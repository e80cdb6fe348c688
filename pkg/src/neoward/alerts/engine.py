"""Live alert engine: thresholds -> posterior chaining -> clustering -> ack.

One engine instance owns all alert state for a gateway.  Events fold into
open clusters under the growing-window rule; acknowledged alerts absorb
same-kind events for a quiet period instead of re-raising; posterior
gating separates sensor artifacts from sustained excursions.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from ..vitalsim.scenario import Scenario, VitalSample, generate_sample
from .bayes import ReliabilityState, posterior_update
from .clustering import ACKNOWLEDGED, RAISED, SUPPRESSED, Alert, ClusterConfig
from .thresholds import ThresholdEvent, ThresholdProfile, default_profiles, threshold_check

RISK_VITAL = "risk"


class AlertNotFound(KeyError):
    pass


@dataclass
class _OpenCluster:
    alert: Alert
    size: int
    last_t_ms: int
    chain_posterior: float


class AlertEngine:
    def __init__(
        self,
        profiles: Optional[Dict[str, ThresholdProfile]] = None,
        cluster_config: Optional[ClusterConfig] = None,
        quiet_period_s: float = 120.0,
        posterior_gate: float = 0.5,
        risk_gate: float = 0.7,
        default_category: str = "term",
        reliability_factory: Callable[[], ReliabilityState] = ReliabilityState,
    ):
        self.profiles = profiles or default_profiles()
        self.cluster_config = cluster_config or ClusterConfig()
        self.quiet_period_ms = quiet_period_s * 1000.0
        self.posterior_gate = posterior_gate
        self.risk_gate = risk_gate
        if default_category not in self.profiles:
            default_category = next(iter(self.profiles))
        self.default_category = default_category
        self._reliability_factory = reliability_factory
        self._categories: Dict[int, str] = {}
        self._reliability: Dict[Tuple[int, str], ReliabilityState] = {}
        self._open: Dict[Tuple[int, str, str], _OpenCluster] = {}
        self._alerts: Dict[int, Alert] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    # -- configuration ----------------------------------------------------

    def set_category(self, device_id: int, category: str) -> None:
        if category not in self.profiles:
            raise KeyError(f"no threshold profile for category {category!r}")
        self._categories[device_id] = category

    def profile_for(self, device_id: int) -> ThresholdProfile:
        return self.profiles[self._categories.get(device_id, self.default_category)]

    def reliability_for(self, device_id: int, vital: str) -> ReliabilityState:
        key = (device_id, vital)
        if key not in self._reliability:
            self._reliability[key] = self._reliability_factory()
        return self._reliability[key]

    # -- event intake ------------------------------------------------------

    def process_sample(self, sample: VitalSample) -> List[Alert]:
        """Feed one sample; returns alerts newly raised by it."""
        with self._lock:
            raised = []
            for event in threshold_check(sample, self.profile_for(sample.device_id)):
                alert = self._absorb(event)
                if alert is not None:
                    raised.append(alert)
            return raised

    def process_risk(self, device_id: int, t_ms: int, p_high: float) -> List[Alert]:
        """Model-predicted risk enters as a fifth event source, gated."""
        if p_high < self.risk_gate:
            return []
        event = ThresholdEvent(
            device_id=device_id,
            vital=RISK_VITAL,
            direction="high",
            t_ms=t_ms,
            value=int(round(p_high * 10000)),
        )
        with self._lock:
            alert = self._absorb(event)
            return [alert] if alert is not None else []

    def _absorb(self, event: ThresholdEvent) -> Optional[Alert]:
        """Fold the event into cluster state; returns a new alert or None."""
        from ..vitalsim.scenario import FLAG_SYNTHETIC_EVENT

        key = (event.device_id, event.vital, event.direction)
        rel = self.reliability_for(event.device_id, event.vital)
        open_cluster = self._open.get(key)

        if open_cluster is not None:
            alert = open_cluster.alert
            if alert.state == ACKNOWLEDGED:
                if (
                    alert.ack_t_ms is not None
                    and event.t_ms <= alert.ack_t_ms + self.quiet_period_ms
                ):
                    self._fold(open_cluster, event, rel)
                    return None
                del self._open[key]
            elif alert.state == RAISED:
                gap = event.t_ms - open_cluster.last_t_ms
                if gap <= self.cluster_config.window_ms(open_cluster.size):
                    self._fold(open_cluster, event, rel)
                    return None
                alert.window_ms_at_close = self.cluster_config.window_ms(open_cluster.size)
                del self._open[key]
            else:
                del self._open[key]

        posterior = posterior_update(rel.prior(), rel.reliability)
        alert = Alert(
            alert_id=next(self._ids),
            device_id=event.device_id,
            vital=event.vital,
            direction=event.direction,
            first_t_ms=event.t_ms,
            last_t_ms=event.t_ms,
            event_count=1,
            posterior=posterior,
            true_event=bool(event.flags & FLAG_SYNTHETIC_EVENT),
        )
        self._alerts[alert.alert_id] = alert
        self._open[key] = _OpenCluster(alert, 1, event.t_ms, posterior)
        return alert

    def _fold(self, cluster: _OpenCluster, event: ThresholdEvent, rel: ReliabilityState) -> None:
        from ..vitalsim.scenario import FLAG_SYNTHETIC_EVENT

        cluster.chain_posterior = posterior_update(cluster.chain_posterior, rel.reliability)
        cluster.size += 1
        cluster.last_t_ms = event.t_ms
        alert = cluster.alert
        alert.event_count = cluster.size
        alert.last_t_ms = event.t_ms
        alert.posterior = max(alert.posterior, cluster.chain_posterior)
        alert.true_event = alert.true_event or bool(event.flags & FLAG_SYNTHETIC_EVENT)

    # -- alert lifecycle ---------------------------------------------------

    def get(self, alert_id: int) -> Alert:
        try:
            return self._alerts[alert_id]
        except KeyError:
            raise AlertNotFound(alert_id) from None

    def alerts(self, state: Optional[str] = None) -> List[Alert]:
        with self._lock:
            found = list(self._alerts.values())
        if state is not None:
            found = [a for a in found if a.state == state]
        return sorted(found, key=lambda a: a.alert_id)

    def acknowledge(self, alert_id: int, user: str, t_ms: Optional[int] = None) -> Alert:
        """Ack a raised alert; double-acks are no-ops.

        The quiet period anchors at `t_ms` when given, otherwise at the
        alert's last event time; both must be on the device timeline.
        """
        with self._lock:
            alert = self.get(alert_id)
            if alert.state == ACKNOWLEDGED:
                return alert
            alert.transition(ACKNOWLEDGED)
            alert.ack_user = user
            alert.ack_t_ms = t_ms if t_ms is not None else alert.last_t_ms
            self.reliability_for(alert.device_id, alert.vital).confirm()
            return alert

    def suppress(self, alert_id: int) -> Alert:
        with self._lock:
            alert = self.get(alert_id)
            alert.transition(SUPPRESSED)
            self.reliability_for(alert.device_id, alert.vital).refute()
            key = (alert.device_id, alert.vital, alert.direction)
            open_cluster = self._open.get(key)
            if open_cluster is not None and open_cluster.alert.alert_id == alert_id:
                del self._open[key]
            return alert


@dataclass(frozen=True)
class SuppressionReport:
    raw_alarms: int
    filtered_alarms: int
    true_alarms: int
    missed_true_events: int
    false_alarm_reduction: float


def evaluate_suppression(
    scenario: Scenario,
    device_id: int,
    profile: ThresholdProfile,
    reliability_factory: Callable[[], ReliabilityState],
    gate: float = 0.5,
    period_ms: int = 1000,
    cluster_config: Optional[ClusterConfig] = None,
) -> SuppressionReport:
    """Replay a labeled scenario and count alarms with/without the gate.

    Truth comes from the scenario itself: alerts whose member samples
    carried the synthetic-event flag are true events, glitch-only alerts
    are artifacts.
    """
    engine = AlertEngine(
        profiles={profile.category: profile},
        cluster_config=cluster_config,
        default_category=profile.category,
        reliability_factory=reliability_factory,
    )
    t_ms = 0
    end_ms = int(scenario.duration_s * 1000)
    while t_ms < end_ms:
        engine.process_sample(generate_sample(scenario, device_id, t_ms))
        t_ms += period_ms

    alerts = engine.alerts()
    raw = len(alerts)
    kept = [a for a in alerts if a.posterior >= gate]
    true_alerts = [a for a in alerts if a.true_event]
    missed = sum(1 for a in true_alerts if a.posterior < gate)
    false_raw = raw - len(true_alerts)
    false_kept = sum(1 for a in kept if not a.true_event)
    reduction = (false_raw - false_kept) / false_raw if false_raw else 0.0
    return SuppressionReport(
        raw_alarms=raw,
        filtered_alarms=len(kept),
        true_alarms=len(true_alerts),
        missed_true_events=missed,
        false_alarm_reduction=reduction,
    )
