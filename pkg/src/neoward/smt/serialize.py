"""Binary model files: magic, dims, row-major float64 tensors, checksum."""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .config import PARAM_ORDER, SmtConfig, param_shapes
from .model import NormStats, SmtModel

MAGIC = b"NWSM"
FORMAT_VERSION = 1
_DIMS = ("window", "modalities", "d_model", "heads", "pos_frequencies", "static_dim", "semistatic_dim", "classes")


class ModelFileError(ValueError):
    pass


def save_model(path: Path, model: SmtModel) -> None:
    cfg = model.cfg
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<H", FORMAT_VERSION)
    blob += struct.pack("<8I", *(getattr(cfg, d) for d in _DIMS))
    blob += struct.pack("<d", model.tau)
    for arr in (
        model.norm.window_mean,
        model.norm.window_std,
        model.norm.static_mean,
        model.norm.static_std,
        model.norm.semi_mean,
        model.norm.semi_std,
    ):
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    for name in PARAM_ORDER:
        blob += np.ascontiguousarray(model.params[name], dtype="<f8").tobytes()
    blob += hashlib.sha256(blob).digest()
    Path(path).write_bytes(bytes(blob))


def load_model(path: Path) -> SmtModel:
    blob = Path(path).read_bytes()
    if len(blob) < 4 + 2 + 32 + 8 or blob[:4] != MAGIC:
        raise ModelFileError("not a model file")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelFileError("model file checksum mismatch")
    pos = 4
    (version,) = struct.unpack_from("<H", body, pos)
    pos += 2
    if version != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model format version {version}")
    dims = struct.unpack_from("<8I", body, pos)
    pos += 8 * 4
    cfg = SmtConfig(**dict(zip(_DIMS, dims)))
    (tau,) = struct.unpack_from("<d", body, pos)
    pos += 8

    def take(count: int) -> np.ndarray:
        nonlocal pos
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=pos).copy()
        pos += count * 8
        return arr

    norm = NormStats(
        window_mean=take(cfg.modalities),
        window_std=take(cfg.modalities),
        static_mean=take(cfg.static_dim),
        static_std=take(cfg.static_dim),
        semi_mean=take(cfg.semistatic_dim),
        semi_std=take(cfg.semistatic_dim),
    )
    params = {}
    for name, shape in ((n, param_shapes(cfg)[n]) for n in PARAM_ORDER):
        params[name] = take(int(np.prod(shape))).reshape(shape)
    if pos != len(body):
        raise ModelFileError("trailing bytes in model file")
    return SmtModel(cfg=cfg, params=params, norm=norm, tau=tau)
