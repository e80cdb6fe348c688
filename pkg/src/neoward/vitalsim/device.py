"""Simulated device main loop: adaptive sampling, batching, burst flushes."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List

from .scenario import (
    FLAG_SYNTHETIC_EVENT,
    AdaptiveRateConfig,
    Scenario,
    VitalSample,
    adaptive_rate,
    generate_sample,
)

# A sink consumes one ordered batch of samples per emitted frame.
BatchSink = Callable[[List[VitalSample]], None]


@dataclass(frozen=True)
class DeviceRunStats:
    samples: int
    frames: int
    bursts: int


def run_device(
    scenario: Scenario,
    sink: BatchSink,
    device_id: int,
    update_interval_s: int = 1,
    rate_config: AdaptiveRateConfig | None = None,
    start_t_ms: int = 0,
) -> DeviceRunStats:
    """Run one device over the scenario, pushing batches into the sink.

    Samples accumulate since the last send and flush once per update
    interval.  A sample carrying the synthetic-event flag flushes the
    pending batch immediately (burst), regardless of the interval.

    `start_t_ms` offsets emitted timestamps onto a shared (epoch)
    timeline; generation itself stays scenario-relative, so the stream
    content is the same whatever the offset.
    """
    if update_interval_s <= 0:
        raise ValueError("update_interval_s must be positive")
    interval_ms = update_interval_s * 1000
    end_ms = int(scenario.duration_s * 1000)

    pending: List[VitalSample] = []
    samples = frames = bursts = 0
    t_ms = 0
    deadline_ms = interval_ms

    def flush():
        nonlocal frames
        if pending:
            sink(list(pending))
            pending.clear()
            frames += 1

    while t_ms < end_ms:
        sample = generate_sample(scenario, device_id, t_ms)
        if start_t_ms:
            sample = replace(sample, t_ms=start_t_ms + sample.t_ms)
        pending.append(sample)
        samples += 1

        rate = adaptive_rate(sample.motion, rate_config)
        next_t = t_ms + max(1, 1000 // rate)

        if sample.flags & FLAG_SYNTHETIC_EVENT:
            flush()
            bursts += 1
            deadline_ms = t_ms + interval_ms  # burst restarts the interval
        elif next_t >= deadline_ms:
            flush()
            deadline_ms += interval_ms
        t_ms = next_t

    flush()
    return DeviceRunStats(samples=samples, frames=frames, bursts=bursts)
