from __future__ import annotations

import pytest

from neoward.vitalsim import Scenario, VitalSample

ZERO_NOISE = {"hr": 0.0, "spo2": 0.0, "rr": 0.0, "temp": 0.0}


def quiet_scenario(duration_s: float = 120.0, seed: int = 0, **kwargs) -> Scenario:
    return Scenario(name="quiet", duration_s=duration_s, seed=seed, noise_std=dict(ZERO_NOISE), **kwargs)


def make_sample(device_id=1, t_ms=0, hr=14000, spo2=9700, rr=4800, temp=3680, motion=20, flags=0):
    return VitalSample(device_id, t_ms, hr, spo2, rr, temp, motion, flags)


@pytest.fixture
def store_key() -> bytes:
    return bytes(range(32))
