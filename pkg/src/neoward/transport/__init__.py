from .varint import VarintError, decode_svarint, decode_uvarint, encode_svarint, encode_uvarint, unzigzag, zigzag
from .batchcodec import (
    BASELINE_BYTES_PER_SAMPLE,
    BatchError,
    BatchOrderError,
    MixedDeviceError,
    compression_ratio,
    decode_batch,
    encode_batch,
)
from .frame import (
    CRC_LEN,
    HEADER_LEN,
    MAGIC,
    MAX_PAYLOAD,
    TAG_LEN,
    TYPE_ACK,
    TYPE_ADVERTISE,
    TYPE_STATIC,
    TYPE_VITALS,
    VERSION,
    AuthFailure,
    BadMagic,
    BadVersion,
    CrcMismatch,
    Frame,
    FrameReceiver,
    FrameSender,
    FramingError,
    NonceReuseError,
    ReplayError,
    TransportError,
    build_frame,
    nonce_for,
    open_sealed,
    parse_frame,
    seal,
)
from .link import (
    ConnectionProfile,
    FrameSocketServer,
    FrameSocketSink,
    InMemoryChannel,
    LinkDownError,
    ReconnectingSink,
    connection_interval_ms,
    next_backoff_ms,
)

__all__ = [name for name in dir() if not name.startswith("_")]
