"""Focal loss with inverse-frequency class weights."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

EPS = 1e-12


class DegenerateDatasetError(ValueError):
    """A class is absent, so its weight is undefined."""


def class_weights(labels: np.ndarray, n_classes: int = 3) -> np.ndarray:
    """alpha_c = N / (C * N_c); recomputed per training set."""
    counts = np.bincount(labels, minlength=n_classes)
    if (counts == 0).any():
        missing = [c for c, k in enumerate(counts) if k == 0]
        raise DegenerateDatasetError(f"classes {missing} absent from the training set")
    return len(labels) / (n_classes * counts.astype(float))


def focal_loss(
    probs: np.ndarray,
    labels: np.ndarray,
    gamma: float = 2.0,
    alpha: Optional[np.ndarray] = None,
) -> float:
    """Mean of -alpha_y (1 - p_y)^gamma log(p_y) over the batch."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    p_y = np.clip(probs[np.arange(len(labels)), labels], EPS, 1.0)
    a_y = 1.0 if alpha is None else alpha[labels]
    return float(np.mean(-a_y * (1.0 - p_y) ** gamma * np.log(p_y)))


def focal_loss_grad_logits(
    probs: np.ndarray,
    labels: np.ndarray,
    gamma: float = 2.0,
    alpha: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """(loss, dL/dlogits) for probs = softmax(logits), mean-reduced.

    dL/dq for q = p_y is alpha * (gamma (1-q)^(gamma-1) log q - (1-q)^gamma / q),
    then routed through the softmax Jacobian q (delta_cy - p_c).
    """
    bsz = len(labels)
    idx = np.arange(bsz)
    q = np.clip(probs[idx, labels], EPS, 1.0)
    a_y = np.ones(bsz) if alpha is None else alpha[labels]

    one_minus = 1.0 - q
    if gamma == 0.0:
        dl_dq = -a_y / q
    else:
        # (1-q)^(gamma-1) is singular at q=1 for gamma<1; the loss term it
        # multiplies vanishes there, so clamp the base instead.
        safe = np.maximum(one_minus, EPS)
        dl_dq = a_y * (gamma * safe ** (gamma - 1.0) * np.log(q) - safe**gamma / q)

    jac = -probs * q[:, None]
    jac[idx, labels] += q
    d_logits = dl_dq[:, None] * jac / bsz

    loss = float(np.mean(-a_y * one_minus**gamma * np.log(q)))
    return loss, d_logits
