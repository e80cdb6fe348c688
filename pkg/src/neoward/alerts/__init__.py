from .thresholds import (
    CATEGORIES,
    HIGH,
    LOW,
    ProfileError,
    ThresholdEvent,
    ThresholdProfile,
    default_profiles,
    parse_profiles,
    threshold_check,
)
from .bayes import ReliabilityState, bayesian_posterior, posterior_update
from .clustering import (
    ACKNOWLEDGED,
    RAISED,
    SUPPRESSED,
    Alert,
    ClusterConfig,
    ClusterOrderError,
    InvalidTransition,
    ScoredEvent,
    cluster,
)
from .engine import (
    RISK_VITAL,
    AlertEngine,
    AlertNotFound,
    SuppressionReport,
    evaluate_suppression,
)

__all__ = [name for name in dir() if not name.startswith("_")]
