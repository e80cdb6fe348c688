"""Bench-measured current draw and battery life for the wearable device.

The currents are discrete lookup points from bench measurements; there is
deliberately no interpolation between update intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

ADVERTISING_CURRENT_MA = 12.79

# Measured average current while connected, by update interval (seconds).
CONNECTED_CURRENT_MA = {1: 13.52, 2: 12.74, 4: 12.70, 5: 12.69}


class UnsupportedIntervalError(ValueError):
    """Update interval without a measured current point."""


@dataclass(frozen=True)
class PowerMode:
    mode: str  # "advertising" | "connected"
    update_interval_s: int | None = None


def power_current(mode: PowerMode) -> float:
    """Average current in mA for a power mode; exact lookup, no interpolation."""
    if mode.mode == "advertising":
        return ADVERTISING_CURRENT_MA
    if mode.mode == "connected":
        try:
            return CONNECTED_CURRENT_MA[mode.update_interval_s]
        except KeyError:
            raise UnsupportedIntervalError(
                f"no measured current for interval {mode.update_interval_s!r}s; "
                f"supported: {sorted(CONNECTED_CURRENT_MA)}"
            ) from None
    raise UnsupportedIntervalError(f"unknown mode {mode.mode!r}")


def max_connected_deviation_ma() -> float:
    """Spread between the hungriest and thriftiest connected intervals."""
    currents = CONNECTED_CURRENT_MA.values()
    # Compute in centi-mA so the float subtraction stays exact.
    return (round(max(currents) * 100) - round(min(currents) * 100)) / 100


def battery_life_h(capacity_mah: float, current_ma: float) -> float:
    """Battery life in hours, rendered to 0.1 h."""
    if capacity_mah <= 0 or current_ma <= 0:
        raise ValueError("capacity and current must be positive")
    return round(capacity_mah / current_ma, 1)
