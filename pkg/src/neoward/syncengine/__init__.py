from .delta import (
    ChecksumMismatch,
    DeltaError,
    SyncDelta,
    UnknownCursorError,
    compress_payload,
    compute_delta,
    decompress_payload,
    resolve_conflict,
    serialize_batch,
)
from .netsim import LATENCY_CEIL_MS, LATENCY_FLOOR_MS, LOSS_CEIL, ImpairedLink, LinkTimeout, NetworkCondition
from .server import AggregationState, BatchRejected, DirectClient, HttpSyncClient, create_mock_server
from .engine import SyncController, SyncReport, sync_once

__all__ = [name for name in dir() if not name.startswith("_")]
