"""Log-strided sparse attention with relative positional bias.

Every query attends to key offsets {0, +-1, +-2, +-4, ..., +-2^floor(log2 n)}
clipped to the sequence, so per-query work is O(log n) and the whole pass
is O(n log n).  Offsets are fixed per pattern column, which turns gather
and scatter into plain shifted slices: for column p with offset o, rows
t in [max(0,-o), n-max(0,o)) attend to t+o and nothing else does.  The
kernel walks the offset columns with sliced vector ops, never
materializing an (n, P, e) tensor, so it stays cache-resident at large n.

The relative bias b(i-j) = sum_k u_k sin(w_k (i-j)) + v_k cos(w_k (i-j))
depends only on the offset, so it is one scalar per pattern column,
shared across heads.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np


def pattern_offsets(n: int) -> List[int]:
    """Attended key offsets for sequence length n, ascending."""
    if n < 2:
        raise ValueError("n must be >= 2")
    offsets = {0}
    e = 1
    while e <= n - 1:
        offsets.add(e)
        offsets.add(-e)
        e *= 2
    # 2^floor(log2 n) is part of the pattern even when n is a power of two.
    top = 1 << int(np.floor(np.log2(n)))
    offsets.update((top, -top))
    return sorted(offsets)


def offset_spans(n: int, offsets: List[int]) -> List[Tuple[int, int]]:
    """Valid query row range [t0, t1) per offset column."""
    return [(max(0, -o), n - max(0, o)) for o in offsets]


def attended_edge_counts(n: int) -> np.ndarray:
    """Edges per query under the clipped pattern (production-side count)."""
    counts = np.zeros(n, dtype=int)
    for t0, t1 in offset_spans(n, pattern_offsets(n)):
        if t1 > t0:
            counts[t0:t1] += 1
    return counts


def valid_mask(n: int, offsets: List[int]) -> np.ndarray:
    """(n, P) True where the offset stays inside the sequence."""
    mask = np.zeros((n, len(offsets)), dtype=bool)
    for p, (t0, t1) in enumerate(offset_spans(n, offsets)):
        if t1 > t0:
            mask[t0:t1, p] = True
    return mask


def relative_bias(offsets: np.ndarray, omega: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """b(delta) per offset: sum_k u_k sin(w_k delta) + v_k cos(w_k delta)."""
    phase = np.outer(offsets, omega)  # (P, K)
    return np.sin(phase) @ u + np.cos(phase) @ v


def sparse_attention_forward(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    bias: np.ndarray,
    offsets: List[int],
) -> Tuple[np.ndarray, Dict]:
    """Masked-softmax attention over the pattern.

    q, k, v: (..., n, e); bias: (P,).  Returns (out, cache) where out has
    the shape of q and cache feeds the backward pass.
    """
    n, e = q.shape[-2], q.shape[-1]
    spans = offset_spans(n, offsets)
    scale = 1.0 / np.sqrt(e)

    logits = np.full(q.shape[:-1] + (len(offsets),), -np.inf)
    for p, (o, (t0, t1)) in enumerate(zip(offsets, spans)):
        if t1 > t0:
            logits[..., t0:t1, p] = (
                np.einsum("...te,...te->...t", q[..., t0:t1, :], k[..., t0 + o : t1 + o, :]) * scale
                + bias[p]
            )
    logits -= logits.max(axis=-1, keepdims=True)  # offset 0 keeps rows finite
    weights = np.exp(logits)
    weights /= weights.sum(axis=-1, keepdims=True)

    out = np.zeros_like(q)
    for p, (o, (t0, t1)) in enumerate(zip(offsets, spans)):
        if t1 > t0:
            out[..., t0:t1, :] += weights[..., t0:t1, p, None] * v[..., t0 + o : t1 + o, :]

    cache = {"q": q, "k": k, "v": v, "weights": weights, "offsets": offsets, "spans": spans}
    return out, cache


def sparse_attention_backward(d_out: np.ndarray, cache: Dict):
    """Returns (dq, dk, dv, dbias) matching sparse_attention_forward."""
    q, k, v = cache["q"], cache["k"], cache["v"]
    weights, offsets, spans = cache["weights"], cache["offsets"], cache["spans"]
    n, e = q.shape[-2], q.shape[-1]
    scale = 1.0 / np.sqrt(e)

    d_weights = np.zeros_like(weights)
    dv = np.zeros_like(v)
    for p, (o, (t0, t1)) in enumerate(zip(offsets, spans)):
        if t1 > t0:
            d_weights[..., t0:t1, p] = np.einsum(
                "...te,...te->...t", d_out[..., t0:t1, :], v[..., t0 + o : t1 + o, :]
            )
            dv[..., t0 + o : t1 + o, :] += weights[..., t0:t1, p, None] * d_out[..., t0:t1, :]

    # Softmax backward; invalid slots carry zero weight, hence zero grad.
    inner = (weights * d_weights).sum(axis=-1, keepdims=True)
    d_logits = weights * (d_weights - inner)

    dq = np.zeros_like(q)
    dk = np.zeros_like(k)
    for p, (o, (t0, t1)) in enumerate(zip(offsets, spans)):
        if t1 > t0:
            dq[..., t0:t1, :] += d_logits[..., t0:t1, p, None] * k[..., t0 + o : t1 + o, :] * scale
            dk[..., t0 + o : t1 + o, :] += d_logits[..., t0:t1, p, None] * q[..., t0:t1, :] * scale

    # Bias is shared across every leading axis (batch, heads) and rows.
    dbias = d_logits.reshape(-1, n, len(offsets)).sum(axis=(0, 1))
    return dq, dk, dv, dbias
