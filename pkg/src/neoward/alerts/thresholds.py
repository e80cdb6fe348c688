"""Per-category clinical threshold profiles and raw threshold events.

The shipped bounds are engineering placeholders for exercising the alert
pipeline, not clinically validated limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from ..vitalsim.scenario import VITAL_KINDS, VitalSample

CATEGORIES = ("extreme-preterm", "very-preterm", "moderate-late-preterm", "term")

LOW = "low"
HIGH = "high"


class ProfileError(ValueError):
    """Malformed threshold profile."""


@dataclass(frozen=True)
class ThresholdProfile:
    category: str
    # vital -> (low, high) in the vital's centi-units
    bounds: Dict[str, Tuple[int, int]]

    def __post_init__(self):
        for kind in VITAL_KINDS:
            if kind not in self.bounds:
                raise ProfileError(f"profile {self.category!r} missing vital {kind!r}")
        for kind, (lo, hi) in self.bounds.items():
            if lo >= hi:
                raise ProfileError(f"{self.category}/{kind}: low must be < high")


@dataclass(frozen=True)
class ThresholdEvent:
    """One vital outside its bounds at one instant."""

    device_id: int
    vital: str
    direction: str  # "low" | "high"
    t_ms: int
    value: int
    flags: int = 0


# Placeholder bounds in natural units, converted to centi-units below.
_DEFAULT_BOUNDS = {
    "extreme-preterm": {"hr": (100, 200), "spo2": (88, 100), "rr": (20, 80), "temp": (36.0, 37.8)},
    "very-preterm": {"hr": (100, 190), "spo2": (89, 100), "rr": (20, 75), "temp": (36.0, 37.8)},
    "moderate-late-preterm": {"hr": (95, 185), "spo2": (90, 100), "rr": (20, 70), "temp": (36.2, 37.8)},
    "term": {"hr": (90, 180), "spo2": (90, 100), "rr": (20, 65), "temp": (36.3, 37.8)},
}


def default_profiles() -> Dict[str, ThresholdProfile]:
    out = {}
    for category, bounds in _DEFAULT_BOUNDS.items():
        centi = {k: (int(round(lo * 100)), int(round(hi * 100))) for k, (lo, hi) in bounds.items()}
        out[category] = ThresholdProfile(category, centi)
    return out


def parse_profiles(text: str) -> Dict[str, ThresholdProfile]:
    """Parse `category vital low high` lines (natural units)."""
    raw: Dict[str, Dict[str, Tuple[int, int]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ProfileError(f"line {lineno}: expected `category vital low high`")
        category, vital, lo, hi = parts
        if vital not in VITAL_KINDS:
            raise ProfileError(f"line {lineno}: unknown vital {vital!r}")
        raw.setdefault(category, {})[vital] = (
            int(round(float(lo) * 100)),
            int(round(float(hi) * 100)),
        )
    return {cat: ThresholdProfile(cat, bounds) for cat, bounds in raw.items()}


def threshold_check(sample: VitalSample, profile: ThresholdProfile) -> List[ThresholdEvent]:
    """Raw out-of-bounds events for one sample; values at a bound are normal."""
    events = []
    for kind in VITAL_KINDS:
        lo, hi = profile.bounds[kind]
        value = sample.vital(kind)
        if value < lo:
            direction = LOW
        elif value > hi:
            direction = HIGH
        else:
            continue
        events.append(
            ThresholdEvent(
                device_id=sample.device_id,
                vital=kind,
                direction=direction,
                t_ms=sample.t_ms,
                value=value,
                flags=sample.flags,
            )
        )
    return events
