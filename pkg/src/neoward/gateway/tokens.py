"""Compact signed bearer tokens, verifiable offline.

Format: base64url(header JSON) . base64url(claims JSON) . base64url(MAC)
with an HMAC-SHA256 over the first two parts under the gateway key.  No
network access is ever needed to verify.
"""

from __future__ import annotations

import base64
import hmac
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

ROLE_PARENT = "parent"
ROLE_PROVIDER = "provider"
ROLES = (ROLE_PARENT, ROLE_PROVIDER)

_HEADER = {"alg": "HS256", "typ": "NWT"}


class TokenError(Exception):
    pass


class MalformedToken(TokenError):
    pass


class BadSignature(TokenError):
    pass


class ExpiredToken(TokenError):
    pass


@dataclass(frozen=True)
class AuthToken:
    subject: str
    role: str
    expires_at_ms: int
    device_id: Optional[int] = None  # parents are scoped to one device


def _b64(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _unb64(text: str) -> bytes:
    pad = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + pad)


def sign_token(
    key: bytes,
    subject: str,
    role: str,
    expires_at_ms: int,
    device_id: Optional[int] = None,
) -> str:
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    claims = {"sub": subject, "role": role, "exp_ms": expires_at_ms}
    if device_id is not None:
        claims["dev"] = str(device_id)
    head = _b64(json.dumps(_HEADER, separators=(",", ":")).encode())
    body = _b64(json.dumps(claims, separators=(",", ":")).encode())
    mac = hmac.new(key, f"{head}.{body}".encode(), hashlib.sha256).digest()
    return f"{head}.{body}.{_b64(mac)}"


def verify_token(token: str, key: bytes, now_ms: int) -> AuthToken:
    parts = token.split(".")
    if len(parts) != 3:
        raise MalformedToken("expected three dot-separated parts")
    head, body, mac_part = parts
    expect = hmac.new(key, f"{head}.{body}".encode(), hashlib.sha256).digest()
    try:
        got = _unb64(mac_part)
    except Exception as exc:
        raise MalformedToken("undecodable signature") from exc
    if not hmac.compare_digest(expect, got):
        raise BadSignature("token signature mismatch")
    try:
        header = json.loads(_unb64(head))
        claims = json.loads(_unb64(body))
        role = claims["role"]
        subject = claims["sub"]
        exp_ms = int(claims["exp_ms"])
    except Exception as exc:
        raise MalformedToken("undecodable token body") from exc
    if header.get("alg") != "HS256":
        raise MalformedToken(f"unsupported algorithm {header.get('alg')!r}")
    if role not in ROLES:
        raise MalformedToken(f"unknown role {role!r}")
    if exp_ms <= now_ms:
        raise ExpiredToken("token expired")
    dev = claims.get("dev")
    return AuthToken(
        subject=subject,
        role=role,
        expires_at_ms=exp_ms,
        device_id=int(dev) if dev is not None else None,
    )
