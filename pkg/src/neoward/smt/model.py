"""Forward and reverse passes for the streaming risk model.

Pipeline per window: 3x3 same-padded convolution over the (time x
modality) grid into d_model channels, mean-pooled over modality; one
multi-head sparse-attention layer with shared relative bias; attention
pooling to a window summary; two-stage fusion with projected static and
semi-static features; linear classifier with temperature softmax.

The backward pass is written against this fixed graph (no autograd
framework); every gradient is checkable by finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .attention import (
    pattern_offsets,
    relative_bias,
    sparse_attention_backward,
    sparse_attention_forward,
)
from .config import Params, SmtConfig

CLASS_NAMES = ("low", "moderate", "high")


@dataclass(frozen=True)
class RiskScore:
    p_low: float
    p_moderate: float
    p_high: float

    def __post_init__(self):
        probs = (self.p_low, self.p_moderate, self.p_high)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_low, self.p_moderate, self.p_high])

    @classmethod
    def from_array(cls, probs: np.ndarray) -> "RiskScore":
        return cls(float(probs[0]), float(probs[1]), float(probs[2]))


@dataclass
class NormStats:
    """Normalization stats for every input source, carried with the model."""

    window_mean: np.ndarray
    window_std: np.ndarray
    static_mean: np.ndarray
    static_std: np.ndarray
    semi_mean: np.ndarray
    semi_std: np.ndarray

    def apply_window(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.window_mean) / self.window_std

    def apply_static(self, statics: np.ndarray) -> np.ndarray:
        return (statics - self.static_mean) / self.static_std

    def apply_semi(self, semis: np.ndarray) -> np.ndarray:
        return (semis - self.semi_mean) / self.semi_std

    @staticmethod
    def _moments(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        flat = x.reshape(-1, x.shape[-1])
        std = flat.std(axis=0)
        return flat.mean(axis=0), np.where(std < 1e-9, 1.0, std)

    @classmethod
    def fit(cls, windows: np.ndarray, statics: np.ndarray, semis: np.ndarray) -> "NormStats":
        wm, ws = cls._moments(windows)
        sm, ss = cls._moments(statics)
        mm, ms = cls._moments(semis)
        return cls(wm, ws, sm, ss, mm, ms)

    @classmethod
    def identity(cls, cfg: "SmtConfig") -> "NormStats":
        return cls(
            np.zeros(cfg.modalities),
            np.ones(cfg.modalities),
            np.zeros(cfg.static_dim),
            np.ones(cfg.static_dim),
            np.zeros(cfg.semistatic_dim),
            np.ones(cfg.semistatic_dim),
        )


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _conv_sums(xn: np.ndarray) -> np.ndarray:
    """Modality-averaged shifted sums feeding the 3x3 kernel.

    xn: (B, n, m) normalized windows -> (B, 3, 3, n) where [b, a, c, t]
    is the modality mean of the zero-padded window shifted by (a-1, c-1).
    """
    b, n, m = xn.shape
    pad = np.zeros((b, n + 2, m + 2))
    pad[:, 1 : n + 1, 1 : m + 1] = xn
    out = np.empty((b, 3, 3, n))
    for a in range(3):
        for c in range(3):
            out[:, a, c, :] = pad[:, a : a + n, c : c + m].mean(axis=2)
    return out


def embed_window(xn: np.ndarray, params: Params) -> Tuple[np.ndarray, np.ndarray]:
    """(B, n, m) normalized -> (B, n, d) sequence; also returns the conv
    cache needed for the kernel gradient."""
    if xn.shape[1] < 3:
        raise ValueError("window too short for the 3x3 kernel")
    sums = _conv_sums(xn)
    seq = np.einsum("cav,Bavt->Btc", params["conv_w"], sums) + params["conv_b"]
    return seq, sums


def forward(
    windows: np.ndarray,
    statics: np.ndarray,
    semistatics: np.ndarray,
    params: Params,
    cfg: SmtConfig,
    norm: NormStats,
    tau: float = 1.0,
) -> Tuple[np.ndarray, Dict]:
    """Batched forward pass; returns (probs (B, C), cache)."""
    if windows.ndim == 2:
        windows = windows[None]
        statics = statics[None]
        semistatics = semistatics[None]
    bsz, n, _ = windows.shape

    xn = norm.apply_window(windows)
    statics = norm.apply_static(statics)
    semistatics = norm.apply_semi(semistatics)
    seq, conv_sums = embed_window(xn, params)  # (B, n, d)

    offsets = pattern_offsets(n)
    bias = relative_bias(np.asarray(offsets, dtype=float), params["pos_omega"], params["pos_u"], params["pos_v"])

    q = np.einsum("Btd,hde->Bhte", seq, params["wq"])
    k = np.einsum("Btd,hde->Bhte", seq, params["wk"])
    v = np.einsum("Btd,hde->Bhte", seq, params["wv"])
    heads, att_cache = sparse_attention_forward(q, k, v, bias, offsets)  # (B, H, n, hd)

    concat = heads.transpose(0, 2, 1, 3).reshape(bsz, n, cfg.d_model)
    attended = concat @ params["wo"] + params["bo"]  # (B, n, d)

    pool_logits = attended @ params["q_pool"]  # (B, n)
    pool_w = softmax(pool_logits, axis=-1)
    summary = np.einsum("Bt,Btd->Bd", pool_w, attended)

    static_emb = statics @ params["ws"] + params["bs"]
    semi_emb = semistatics @ params["wss"] + params["bss"]
    sources = np.stack([summary, static_emb, semi_emb], axis=1)  # (B, 3, d)

    fuse_logits = sources @ params["q_fuse"]  # (B, 3)
    fuse_w = softmax(fuse_logits, axis=-1)
    fused = np.einsum("Bs,Bsd->Bd", fuse_w, sources)

    logits = fused @ params["wc"] + params["bc"]
    probs = softmax(logits / tau, axis=-1)

    cache = {
        "xn": xn,
        "conv_sums": conv_sums,
        "seq": seq,
        "offsets": offsets,
        "att_cache": att_cache,
        "heads": heads,
        "concat": concat,
        "attended": attended,
        "pool_w": pool_w,
        "summary": summary,
        "statics": statics,
        "semistatics": semistatics,
        "static_emb": static_emb,
        "semi_emb": semi_emb,
        "sources": sources,
        "fuse_w": fuse_w,
        "fused": fused,
        "logits": logits,
        "probs": probs,
        "cfg": cfg,
    }
    return probs, cache


def backward(d_logits: np.ndarray, cache: Dict, params: Params) -> Params:
    """Gradients of a scalar loss given dL/dlogits (B, C)."""
    cfg: SmtConfig = cache["cfg"]
    bsz, n = cache["seq"].shape[0], cache["seq"].shape[1]
    grads: Params = {}

    fused, sources, fuse_w = cache["fused"], cache["sources"], cache["fuse_w"]
    grads["wc"] = np.einsum("Bd,Bc->dc", fused, d_logits)
    grads["bc"] = d_logits.sum(axis=0)
    d_fused = d_logits @ params["wc"].T  # (B, d)

    # Fusion stage 2: fused = sum_s fuse_w[s] * sources[s]
    d_fuse_w = np.einsum("Bd,Bsd->Bs", d_fused, sources)
    d_sources = fuse_w[..., None] * d_fused[:, None, :]
    inner = (fuse_w * d_fuse_w).sum(axis=1, keepdims=True)
    d_fuse_logits = fuse_w * (d_fuse_w - inner)  # (B, 3)
    grads["q_fuse"] = np.einsum("Bs,Bsd->d", d_fuse_logits, sources)
    d_sources += d_fuse_logits[..., None] * params["q_fuse"]

    d_summary = d_sources[:, 0]
    d_static_emb = d_sources[:, 1]
    d_semi_emb = d_sources[:, 2]

    grads["ws"] = cache["statics"].T @ d_static_emb
    grads["bs"] = d_static_emb.sum(axis=0)
    grads["wss"] = cache["semistatics"].T @ d_semi_emb
    grads["bss"] = d_semi_emb.sum(axis=0)

    # Pooling: summary = sum_t pool_w[t] * attended[t]
    attended, pool_w = cache["attended"], cache["pool_w"]
    d_pool_w = np.einsum("Bd,Btd->Bt", d_summary, attended)
    d_attended = pool_w[..., None] * d_summary[:, None, :]
    inner = (pool_w * d_pool_w).sum(axis=1, keepdims=True)
    d_pool_logits = pool_w * (d_pool_w - inner)  # (B, n)
    grads["q_pool"] = np.einsum("Bt,Btd->d", d_pool_logits, attended)
    d_attended += d_pool_logits[..., None] * params["q_pool"]

    concat = cache["concat"]
    grads["wo"] = np.einsum("Btd,Bte->de", concat, d_attended)
    grads["bo"] = d_attended.sum(axis=(0, 1))
    d_concat = d_attended @ params["wo"].T

    d_heads = d_concat.reshape(bsz, n, cfg.heads, cfg.head_dim).transpose(0, 2, 1, 3)
    dq, dk, dv, d_bias = sparse_attention_backward(d_heads, cache["att_cache"])

    seq = cache["seq"]
    grads["wq"] = np.einsum("Btd,Bhte->hde", seq, dq)
    grads["wk"] = np.einsum("Btd,Bhte->hde", seq, dk)
    grads["wv"] = np.einsum("Btd,Bhte->hde", seq, dv)
    d_seq = (
        np.einsum("Bhte,hde->Btd", dq, params["wq"])
        + np.einsum("Bhte,hde->Btd", dk, params["wk"])
        + np.einsum("Bhte,hde->Btd", dv, params["wv"])
    )

    # Relative bias: b_p = sum_k u_k sin(w_k o_p) + v_k cos(w_k o_p)
    offs = np.asarray(cache["offsets"], dtype=float)
    phase = np.outer(offs, params["pos_omega"])  # (P, K)
    grads["pos_u"] = np.sin(phase).T @ d_bias
    grads["pos_v"] = np.cos(phase).T @ d_bias
    grads["pos_omega"] = (
        (params["pos_u"] * np.cos(phase) - params["pos_v"] * np.sin(phase)) * offs[:, None]
    ).T @ d_bias

    grads["conv_w"] = np.einsum("Btc,Bavt->cav", d_seq, cache["conv_sums"])
    grads["conv_b"] = d_seq.sum(axis=(0, 1))
    return grads


def predict_probs(
    windows: np.ndarray,
    statics: np.ndarray,
    semistatics: np.ndarray,
    params: Params,
    cfg: SmtConfig,
    norm: NormStats,
    tau: float = 1.0,
) -> np.ndarray:
    probs, _ = forward(windows, statics, semistatics, params, cfg, norm, tau)
    return probs


def classify(
    window: np.ndarray,
    static: np.ndarray,
    semistatic: np.ndarray,
    params: Params,
    cfg: SmtConfig,
    norm: NormStats,
    tau: float = 1.0,
) -> RiskScore:
    probs = predict_probs(window[None], static[None], semistatic[None], params, cfg, norm, tau)
    return RiskScore.from_array(probs[0])


def fusion_weights(cache: Dict) -> np.ndarray:
    """Stage-2 attention weights over (window summary, static, semi-static)."""
    return cache["fuse_w"]


@dataclass
class SmtModel:
    """Bundle of everything needed for inference."""

    cfg: SmtConfig
    params: Params
    norm: NormStats
    tau: float = 1.0

    def predict(self, windows, statics, semistatics) -> np.ndarray:
        return predict_probs(windows, statics, semistatics, self.params, self.cfg, self.norm, self.tau)

    def risk_score(self, window, static, semistatic) -> RiskScore:
        return classify(window, static, semistatic, self.params, self.cfg, self.norm, self.tau)
