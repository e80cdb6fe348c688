"""Model hyperparameters and parameter initialization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

Params = Dict[str, np.ndarray]

# Serialization order; every trainable tensor appears exactly once.
PARAM_ORDER = (
    "conv_w",
    "conv_b",
    "wq",
    "wk",
    "wv",
    "wo",
    "bo",
    "pos_omega",
    "pos_u",
    "pos_v",
    "ws",
    "bs",
    "wss",
    "bss",
    "q_pool",
    "q_fuse",
    "wc",
    "bc",
)


@dataclass(frozen=True)
class SmtConfig:
    window: int = 300  # samples per window (5 min at 1 Hz)
    modalities: int = 4
    d_model: int = 64
    heads: int = 4
    pos_frequencies: int = 8
    static_dim: int = 3
    semistatic_dim: int = 6
    classes: int = 3

    def __post_init__(self):
        if self.window < 8:
            raise ValueError("window must be >= 8")
        if self.d_model % self.heads:
            raise ValueError("d_model must divide evenly across heads")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads


def param_shapes(cfg: SmtConfig) -> Dict[str, tuple]:
    d, h, hd, k = cfg.d_model, cfg.heads, cfg.head_dim, cfg.pos_frequencies
    return {
        "conv_w": (d, 3, 3),
        "conv_b": (d,),
        "wq": (h, d, hd),
        "wk": (h, d, hd),
        "wv": (h, d, hd),
        "wo": (d, d),
        "bo": (d,),
        "pos_omega": (k,),
        "pos_u": (k,),
        "pos_v": (k,),
        "ws": (cfg.static_dim, d),
        "bs": (d,),
        "wss": (cfg.semistatic_dim, d),
        "bss": (d,),
        "q_pool": (d,),
        "q_fuse": (d,),
        "wc": (d, cfg.classes),
        "bc": (cfg.classes,),
    }


def init_params(cfg: SmtConfig, seed: int = 0) -> Params:
    rng = np.random.default_rng(seed)
    d = cfg.d_model
    shapes = param_shapes(cfg)
    params: Params = {}
    for name, shape in shapes.items():
        if name == "pos_omega":
            # Geometric frequency ladder; learnable from here.
            params[name] = np.geomspace(1.0, 1.0 / 64.0, cfg.pos_frequencies)
        elif name.startswith(("b", "pos_")):
            params[name] = np.zeros(shape)
        elif name in ("q_pool", "q_fuse"):
            params[name] = rng.standard_normal(shape) / np.sqrt(d)
        else:
            fan_in = shape[-2] if len(shape) >= 2 else shape[0]
            params[name] = rng.standard_normal(shape) / np.sqrt(fan_in)
    return params


def zero_grads(cfg: SmtConfig) -> Params:
    return {name: np.zeros(shape) for name, shape in param_shapes(cfg).items()}
