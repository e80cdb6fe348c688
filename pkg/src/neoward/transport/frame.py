"""Sealed wire frames: header, AEAD payload, CRC trailer, replay checks.

Frame layout (little-endian):

    magic      2   0x4E 0x57
    version    1   0x01
    frame_type 1   0 advertise | 1 vitals-batch | 2 ack | 3 static-features
    device_id  8
    seq        4   strictly increasing per device per connection
    nonce_ctr  4
    payload_len 2  <= 4096
    ciphertext payload_len
    auth_tag   16  ChaCha20-Poly1305 tag, AD = header bytes
    crc32      4   over all preceding bytes

The CRC distinguishes line corruption from tampering (tag) and staleness
(seq); parse failures map to distinct error kinds so callers can tell
them apart.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Callable, Dict, List, Union

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from ..vitalsim.scenario import VitalSample
from . import batchcodec

MAGIC = b"\x4e\x57"
VERSION = 1
MAX_PAYLOAD = 4096

TYPE_ADVERTISE = 0
TYPE_VITALS = 1
TYPE_ACK = 2
TYPE_STATIC = 3

_HEADER = struct.Struct("<2sBBQIIH")
HEADER_LEN = _HEADER.size  # 22
TAG_LEN = 16
CRC_LEN = 4
MIN_FRAME = HEADER_LEN + TAG_LEN + CRC_LEN


class TransportError(Exception):
    """Base for all wire-level failures."""


class BadMagic(TransportError):
    pass


class BadVersion(TransportError):
    pass


class FramingError(TransportError):
    """Truncated frame or length fields inconsistent with the buffer."""


class CrcMismatch(TransportError):
    pass


class AuthFailure(TransportError):
    """AEAD tag verification failed (payload or header tampered)."""


class ReplayError(TransportError):
    """Sequence number not newer than the last accepted frame."""


class NonceReuseError(TransportError):
    """Attempt to seal with a non-monotonic nonce counter."""


@dataclass(frozen=True)
class Frame:
    frame_type: int
    device_id: int
    seq: int
    nonce_ctr: int
    ciphertext: bytes
    auth_tag: bytes

    def header_bytes(self) -> bytes:
        return _HEADER.pack(
            MAGIC,
            VERSION,
            self.frame_type,
            self.device_id,
            self.seq,
            self.nonce_ctr,
            len(self.ciphertext),
        )


def nonce_for(device_id: int, nonce_ctr: int) -> bytes:
    """12-byte nonce: device id (8 bytes LE) followed by the counter."""
    return struct.pack("<QI", device_id, nonce_ctr)


def seal(
    plaintext: bytes,
    key: bytes,
    device_id: int,
    seq: int,
    nonce_ctr: int,
    frame_type: int = TYPE_VITALS,
) -> tuple[bytes, bytes]:
    """Encrypt and authenticate, binding the frame header as AD."""
    if len(plaintext) > MAX_PAYLOAD:
        raise FramingError(f"payload {len(plaintext)} exceeds {MAX_PAYLOAD}")
    header = _HEADER.pack(MAGIC, VERSION, frame_type, device_id, seq, nonce_ctr, len(plaintext))
    sealed = ChaCha20Poly1305(key).encrypt(nonce_for(device_id, nonce_ctr), plaintext, header)
    return sealed[:-TAG_LEN], sealed[-TAG_LEN:]


def open_sealed(
    ciphertext: bytes,
    auth_tag: bytes,
    key: bytes,
    device_id: int,
    seq: int,
    nonce_ctr: int,
    frame_type: int = TYPE_VITALS,
) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, frame_type, device_id, seq, nonce_ctr, len(ciphertext))
    try:
        return ChaCha20Poly1305(key).decrypt(
            nonce_for(device_id, nonce_ctr), ciphertext + auth_tag, header
        )
    except InvalidTag as exc:
        raise AuthFailure("authentication tag mismatch") from exc


def build_frame(
    plaintext: bytes,
    key: bytes,
    device_id: int,
    seq: int,
    nonce_ctr: int,
    frame_type: int = TYPE_VITALS,
) -> bytes:
    ciphertext, tag = seal(plaintext, key, device_id, seq, nonce_ctr, frame_type)
    frame = Frame(frame_type, device_id, seq, nonce_ctr, ciphertext, tag)
    body = frame.header_bytes() + ciphertext + tag
    return body + struct.pack("<I", zlib.crc32(body))


def parse_frame(buf: bytes) -> Frame:
    """Validate framing, magic, version and CRC; no decryption.

    Check order is fixed so every corruption maps to one error kind:
    magic, then version, then length consistency, then CRC.
    """
    if len(buf) < MIN_FRAME:
        raise FramingError(f"frame shorter than minimum {MIN_FRAME}")
    if buf[:2] != MAGIC:
        raise BadMagic(f"magic {buf[:2]!r}")
    if buf[2] != VERSION:
        raise BadVersion(f"version {buf[2]}")
    _, _, frame_type, device_id, seq, nonce_ctr, payload_len = _HEADER.unpack_from(buf)
    if payload_len > MAX_PAYLOAD:
        raise FramingError(f"declared payload {payload_len} exceeds {MAX_PAYLOAD}")
    if len(buf) != HEADER_LEN + payload_len + TAG_LEN + CRC_LEN:
        raise FramingError("buffer length inconsistent with payload_len")
    (crc,) = struct.unpack_from("<I", buf, len(buf) - CRC_LEN)
    if zlib.crc32(buf[:-CRC_LEN]) != crc:
        raise CrcMismatch("crc32 mismatch")
    ciphertext = bytes(buf[HEADER_LEN : HEADER_LEN + payload_len])
    tag = bytes(buf[HEADER_LEN + payload_len : HEADER_LEN + payload_len + TAG_LEN])
    return Frame(frame_type, device_id, seq, nonce_ctr, ciphertext, tag)


class FrameSender:
    """Per-device sealing state: monotonic seq and nonce counters."""

    def __init__(self, key: bytes, device_id: int):
        self.key = key
        self.device_id = device_id
        self._seq = 0
        self._nonce_ctr = 0

    def next_counters(self) -> tuple[int, int]:
        seq, ctr = self._seq, self._nonce_ctr
        if ctr > 0xFFFFFFFF or seq > 0xFFFFFFFF:
            raise NonceReuseError("counter space exhausted; rekey required")
        self._seq += 1
        self._nonce_ctr += 1
        return seq, ctr

    def send_payload(self, plaintext: bytes, frame_type: int = TYPE_VITALS) -> bytes:
        seq, ctr = self.next_counters()
        return build_frame(plaintext, self.key, self.device_id, seq, ctr, frame_type)

    def send_batch(self, samples: List[VitalSample]) -> bytes:
        return self.send_payload(batchcodec.encode_batch(samples), TYPE_VITALS)


KeyLookup = Union[Dict[int, bytes], Callable[[int], bytes]]


class FrameReceiver:
    """Parses, authenticates and replay-checks frames per device."""

    def __init__(self, keys: KeyLookup):
        self._keys = keys
        self._last_seq: Dict[int, int] = {}

    def key_for(self, device_id: int) -> bytes:
        if callable(self._keys):
            return self._keys(device_id)
        try:
            return self._keys[device_id]
        except KeyError:
            raise AuthFailure(f"no key for device {device_id}") from None

    def receive(self, buf: bytes) -> tuple[Frame, bytes]:
        """Full inbound path: parse -> decrypt -> replay check.

        A stale seq raises ReplayError and leaves the per-device state
        untouched, so a replayed frame is simply dropped.
        """
        frame = parse_frame(buf)
        key = self.key_for(frame.device_id)
        plaintext = open_sealed(
            frame.ciphertext,
            frame.auth_tag,
            key,
            frame.device_id,
            frame.seq,
            frame.nonce_ctr,
            frame.frame_type,
        )
        last = self._last_seq.get(frame.device_id)
        if last is not None and frame.seq <= last:
            raise ReplayError(f"seq {frame.seq} not newer than {last}")
        self._last_seq[frame.device_id] = frame.seq
        return frame, plaintext
