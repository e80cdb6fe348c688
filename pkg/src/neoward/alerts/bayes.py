"""False-alarm posterior from sensor reliability and event history.

An abnormal reading is either a true event or a sensor artifact.  With
prior true-event probability pi and sensor reliability r (probability a
reading is faithful), the posterior that the reading reflects a true
event is

    p = pi * r / (pi * r + (1 - pi) * (1 - r))

The prior comes from per-device event history as the mean of a Beta(a, b)
over the true-event rate: confirmed alerts bump a, refuted ones bump b.
Consecutive corroborating readings chain: each reading's posterior is the
next one's prior, so sustained excursions drive p toward 1 while isolated
artifacts stay near the (low) prior.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ReliabilityState:
    """Per-device per-vital sensor trust and event history."""

    reliability: float = 0.9
    a: float = 1.0  # confirmed-event pseudo-count
    b: float = 1.0  # refuted-event pseudo-count

    def __post_init__(self):
        if not 0.0 < self.reliability < 1.0:
            raise ValueError("reliability must lie strictly inside (0, 1)")
        if self.a < 1 or self.b < 1:
            raise ValueError("history counts must be >= 1")

    def prior(self) -> float:
        return self.a / (self.a + self.b)

    def confirm(self) -> None:
        self.a += 1

    def refute(self) -> None:
        self.b += 1


def posterior_update(prior: float, reliability: float) -> float:
    """One Bayes step for a single abnormal reading."""
    if not 0.0 < reliability < 1.0:
        raise ValueError("reliability must lie strictly inside (0, 1)")
    if not 0.0 <= prior <= 1.0:
        raise ValueError("prior must lie in [0, 1]")
    num = prior * reliability
    return num / (num + (1.0 - prior) * (1.0 - reliability))


def bayesian_posterior(rel: ReliabilityState) -> float:
    """Posterior for one abnormal reading under the history-derived prior."""
    return posterior_update(rel.prior(), rel.reliability)
