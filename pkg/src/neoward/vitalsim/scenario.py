"""Scenario-driven vital sign generation for simulated wearable devices.

Vitals are generated as piecewise-linear baselines plus additive event
deltas plus seeded Gaussian sensor noise, then quantized to centi-units
(centi-bpm, centi-percent, centi-breaths/min, centi-degC).  Generation is
stateless: the noise for a given (scenario seed, device_id, t_ms) is always
the same, regardless of call order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# VitalSample.flags bits
FLAG_SENSOR_DEGRADED = 0x01
FLAG_SYNTHETIC_EVENT = 0x02

VITAL_KINDS = ("hr", "spo2", "rr", "temp")

# Clamp ranges in centi-units.
_CLAMPS = {
    "hr": (0, 30000),
    "spo2": (0, 10000),
    "rr": (0, 20000),
    "temp": (2000, 4500),
}

# Default per-vital noise std, natural units (bpm, %, /min, degC).
_DEFAULT_NOISE = {"hr": 2.04, "spo2": 1.39, "rr": 2.0, "temp": 0.2}

# Which vital an event kind perturbs.
EVENT_VITAL = {
    "bradycardia": "hr",
    "desaturation": "spo2",
    "hypothermia": "temp",
    "apnea": "rr",
}

_DEFAULT_BASELINES = {"hr": 140.0, "spo2": 97.0, "rr": 48.0, "temp": 36.8}


class ScenarioError(ValueError):
    """Invalid scenario definition."""


class ScenarioRangeError(ScenarioError):
    """Requested sample time outside the scenario duration."""


@dataclass(frozen=True)
class VitalSample:
    """One timestamped multimodal reading from one device (centi-units)."""

    device_id: int
    t_ms: int
    hr: int
    spo2: int
    rr: int
    temp: int
    motion: int
    flags: int = 0

    def vital(self, kind: str) -> int:
        return getattr(self, kind)


@dataclass(frozen=True)
class Event:
    """Additive vital excursion: `magnitude` is signed, natural units."""

    kind: str
    onset_s: float
    duration_s: float
    magnitude: float

    @property
    def vital(self) -> str:
        return EVENT_VITAL[self.kind]

    def active_at(self, t_s: float) -> bool:
        return self.onset_s <= t_s < self.onset_s + self.duration_s


@dataclass(frozen=True)
class Glitch:
    """Transient spurious reading on one vital; flags the sample degraded."""

    vital: str
    onset_s: float
    duration_s: float
    magnitude: float

    def active_at(self, t_s: float) -> bool:
        return self.onset_s <= t_s < self.onset_s + self.duration_s


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    seed: int = 0
    # Piecewise-linear curves: sorted (t_s, value) points, natural units.
    baselines: dict = field(default_factory=dict)
    motion_curve: tuple = ((0.0, 20.0),)
    events: tuple = ()
    glitches: tuple = ()
    noise_std: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        for kind, std in self.noise_std.items():
            if std < 0:
                raise ScenarioError(f"noise std for {kind} must be >= 0")
        for ev in self.events:
            if ev.kind not in EVENT_VITAL:
                raise ScenarioError(f"unknown event kind {ev.kind!r}")
            if ev.onset_s < 0 or ev.onset_s + ev.duration_s > self.duration_s:
                raise ScenarioError(f"event {ev.kind} outside scenario duration")
        for gl in self.glitches:
            if gl.vital not in VITAL_KINDS:
                raise ScenarioError(f"unknown glitch vital {gl.vital!r}")
            if gl.onset_s < 0 or gl.onset_s + gl.duration_s > self.duration_s:
                raise ScenarioError("glitch outside scenario duration")

    def baseline(self, kind: str, t_s: float) -> float:
        curve = self.baselines.get(kind)
        if curve is None:
            return _DEFAULT_BASELINES[kind]
        return _interp(curve, t_s)

    def motion(self, t_s: float) -> float:
        return _interp(self.motion_curve, t_s)

    def noise(self, kind: str) -> float:
        return self.noise_std.get(kind, _DEFAULT_NOISE[kind])

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


def _interp(curve, t_s: float) -> float:
    """Piecewise-linear interpolation; flat extrapolation at the edges."""
    if len(curve) == 1:
        return curve[0][1]
    ts = [p[0] for p in curve]
    vs = [p[1] for p in curve]
    return float(np.interp(t_s, ts, vs))


def _clamp(kind: str, centi: int) -> int:
    lo, hi = _CLAMPS[kind]
    return min(hi, max(lo, centi))


def generate_sample(scenario: Scenario, device_id: int, t_ms: int) -> VitalSample:
    """Generate the deterministic sample for one device at one instant.

    Raises ScenarioRangeError when t_ms lies outside [0, duration].
    """
    if t_ms < 0 or t_ms > scenario.duration_s * 1000:
        raise ScenarioRangeError(f"t_ms {t_ms} outside scenario {scenario.name!r}")
    t_s = t_ms / 1000.0

    # One noise draw per vital plus one for motion, derived statelessly.
    rng = np.random.default_rng((scenario.seed, device_id & 0xFFFFFFFFFFFFFFFF, t_ms))
    draws = rng.standard_normal(5)

    flags = 0
    values = {}
    for i, kind in enumerate(VITAL_KINDS):
        x = scenario.baseline(kind, t_s)
        for ev in scenario.events:
            if ev.vital == kind and ev.active_at(t_s):
                x += ev.magnitude
                flags |= FLAG_SYNTHETIC_EVENT
        for gl in scenario.glitches:
            if gl.vital == kind and gl.active_at(t_s):
                x += gl.magnitude
                flags |= FLAG_SENSOR_DEGRADED
        x += scenario.noise(kind) * draws[i]
        values[kind] = _clamp(kind, int(round(x * 100)))

    motion = scenario.motion(t_s) + scenario.noise_std.get("motion", 0.0) * draws[4]
    motion = min(255, max(0, int(round(motion))))

    return VitalSample(
        device_id=device_id,
        t_ms=t_ms,
        hr=values["hr"],
        spo2=values["spo2"],
        rr=values["rr"],
        temp=values["temp"],
        motion=motion,
        flags=flags,
    )


@dataclass(frozen=True)
class AdaptiveRateConfig:
    """Motion tier -> sampling rate map; tiers are (upper_exclusive, hz)."""

    tiers: tuple = ((64, 1), (192, 4), (256, 10))

    def __post_init__(self):
        rates = [r for _, r in self.tiers]
        if any(r < 1 for r in rates):
            raise ScenarioError("tier rates must be >= 1 Hz")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ScenarioError("tier rates must be strictly increasing")
        bounds = [b for b, _ in self.tiers]
        if any(y <= x for x, y in zip(bounds, bounds[1:])):
            raise ScenarioError("tier bounds must be strictly increasing")


def adaptive_rate(motion: int, config: AdaptiveRateConfig | None = None) -> int:
    """Samples/second for a motion level; monotone non-decreasing in motion."""
    cfg = config or AdaptiveRateConfig()
    for upper, hz in cfg.tiers:
        if motion < upper:
            return hz
    return cfg.tiers[-1][1]


# ---------------------------------------------------------------------------
# Scenario text format: `key = value` lines plus `event`/`glitch` lines.
# Curves are either a single number or comma-separated `t:value` pairs.
# ---------------------------------------------------------------------------

def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    fields = {
        "name": name,
        "duration_s": 60.0,
        "seed": 0,
        "baselines": {},
        "motion_curve": ((0.0, 20.0),),
        "noise_std": {},
    }
    events = []
    glitches = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("event "):
            parts = line.split()
            if len(parts) != 5:
                raise ScenarioError(f"line {lineno}: event needs kind/onset/duration/magnitude")
            events.append(Event(parts[1], float(parts[2]), float(parts[3]), float(parts[4])))
            continue
        if line.startswith("glitch "):
            parts = line.split()
            if len(parts) != 5:
                raise ScenarioError(f"line {lineno}: glitch needs vital/onset/duration/magnitude")
            glitches.append(Glitch(parts[1], float(parts[2]), float(parts[3]), float(parts[4])))
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key = value")
        key, _, value = (s.strip() for s in line.partition("="))
        if key == "name":
            fields["name"] = value
        elif key == "duration_s":
            fields["duration_s"] = float(value)
        elif key == "seed":
            fields["seed"] = int(value)
        elif key.startswith("baseline."):
            vital = key.split(".", 1)[1]
            curve = _parse_curve(value, lineno)
            if vital == "motion":
                fields["motion_curve"] = curve
            elif vital in VITAL_KINDS:
                fields["baselines"][vital] = curve
            else:
                raise ScenarioError(f"line {lineno}: unknown vital {vital!r}")
        elif key.startswith("noise."):
            vital = key.split(".", 1)[1]
            if vital not in VITAL_KINDS and vital != "motion":
                raise ScenarioError(f"line {lineno}: unknown vital {vital!r}")
            fields["noise_std"][vital] = float(value)
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    return Scenario(
        name=fields["name"],
        duration_s=fields["duration_s"],
        seed=fields["seed"],
        baselines=fields["baselines"],
        motion_curve=fields["motion_curve"],
        events=tuple(events),
        glitches=tuple(glitches),
        noise_std=fields["noise_std"],
    )


def _parse_curve(value: str, lineno: int):
    points = []
    for chunk in value.split(","):
        chunk = chunk.strip()
        if ":" in chunk:
            t, _, v = chunk.partition(":")
            points.append((float(t), float(v)))
        else:
            points.append((0.0, float(chunk)))
    if len(points) > 1 and any(b[0] <= a[0] for a, b in zip(points, points[1:])):
        raise ScenarioError(f"line {lineno}: curve times must strictly increase")
    return tuple(points)


def builtin_scenario(name: str, duration_s: float = 3600.0, seed: int = 0) -> Scenario:
    """Small library of canned scenarios used by the CLI and tests."""
    if name == "stable":
        return Scenario(name="stable", duration_s=duration_s, seed=seed)
    if name == "stable-quiet":
        return Scenario(
            name="stable-quiet",
            duration_s=duration_s,
            seed=seed,
            noise_std={k: 0.0 for k in VITAL_KINDS},
        )
    if name == "desat":
        onset = min(120.0, duration_s / 4)
        dur = min(60.0, duration_s / 4)
        return Scenario(
            name="desat",
            duration_s=duration_s,
            seed=seed,
            events=(Event("desaturation", onset, dur, -12.0),),
        )
    if name == "brady":
        onset = min(120.0, duration_s / 4)
        dur = min(45.0, duration_s / 4)
        return Scenario(
            name="brady",
            duration_s=duration_s,
            seed=seed,
            events=(Event("bradycardia", onset, dur, -50.0),),
        )
    if name == "active":
        return Scenario(
            name="active",
            duration_s=duration_s,
            seed=seed,
            motion_curve=((0.0, 20.0), (duration_s / 2, 220.0), (duration_s, 40.0)),
        )
    raise ScenarioError(f"unknown builtin scenario {name!r}")
