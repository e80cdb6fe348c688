"""Key handling: per-device keys derived from a pre-shared master key."""

from __future__ import annotations

import hashlib
import hmac
import struct
from pathlib import Path

KEY_LEN = 32


def derive_device_key(master_key: bytes, device_id: int) -> bytes:
    """Deterministic per-device key: HMAC(master, tag || device_id)."""
    return hmac.new(master_key, b"neoward-device" + struct.pack("<Q", device_id), hashlib.sha256).digest()


def load_or_create_key(path: Path) -> bytes:
    """Read a 32-byte key file, creating one (urandom) when absent."""
    import os

    path = Path(path)
    if path.exists():
        key = path.read_bytes()
        if len(key) != KEY_LEN:
            raise ValueError(f"{path}: key file must hold exactly {KEY_LEN} bytes")
        return key
    path.parent.mkdir(parents=True, exist_ok=True)
    key = os.urandom(KEY_LEN)
    path.write_bytes(key)
    return key
