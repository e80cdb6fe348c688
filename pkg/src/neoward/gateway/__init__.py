from .ring import ACCEPTED, OVERWROTE, RingBuffer
from .store import (
    KIND_ANNOTATION,
    KIND_DEVICE_META,
    KIND_SESSION,
    KIND_VITAL,
    RECORD_KINDS,
    Store,
    StoreError,
    StoredRecord,
    UnknownCursorError,
    pack_vital,
    unpack_vital,
)
from .tokens import (
    ROLE_PARENT,
    ROLE_PROVIDER,
    AuthToken,
    BadSignature,
    ExpiredToken,
    MalformedToken,
    TokenError,
    sign_token,
    verify_token,
)
from .service import (
    DeviceState,
    GatewayService,
    IngestMetrics,
    KmcSession,
    SessionConflict,
    SessionNotFound,
    alert_to_json,
    sample_to_json,
)
from .api import create_app

__all__ = [name for name in dir() if not name.startswith("_")]
