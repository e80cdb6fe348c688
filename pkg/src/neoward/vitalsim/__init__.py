from .scenario import (
    FLAG_SENSOR_DEGRADED,
    FLAG_SYNTHETIC_EVENT,
    AdaptiveRateConfig,
    Event,
    Glitch,
    Scenario,
    ScenarioError,
    ScenarioRangeError,
    VitalSample,
    adaptive_rate,
    builtin_scenario,
    generate_sample,
    parse_scenario,
)
from .power import (
    ADVERTISING_CURRENT_MA,
    CONNECTED_CURRENT_MA,
    PowerMode,
    UnsupportedIntervalError,
    battery_life_h,
    max_connected_deviation_ma,
    power_current,
)
from .device import DeviceRunStats, run_device

__all__ = [
    "ADVERTISING_CURRENT_MA",
    "AdaptiveRateConfig",
    "CONNECTED_CURRENT_MA",
    "DeviceRunStats",
    "Event",
    "FLAG_SENSOR_DEGRADED",
    "FLAG_SYNTHETIC_EVENT",
    "Glitch",
    "PowerMode",
    "Scenario",
    "ScenarioError",
    "ScenarioRangeError",
    "UnsupportedIntervalError",
    "VitalSample",
    "adaptive_rate",
    "battery_life_h",
    "builtin_scenario",
    "generate_sample",
    "max_connected_deviation_ma",
    "parse_scenario",
    "power_current",
    "run_device",
]
