"""Central finite-difference verification of every parameter gradient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .config import Params, SmtConfig, init_params
from .loss import focal_loss_grad_logits
from .model import NormStats, backward, forward


@dataclass(frozen=True)
class GradCheckEntry:
    name: str
    max_rel_err: float
    checked: int


def _loss_of(params: Params, data, cfg: SmtConfig, norm: NormStats, gamma: float) -> float:
    windows, statics, semis, labels = data
    probs, _ = forward(windows, statics, semis, params, cfg, norm)
    loss, _ = focal_loss_grad_logits(probs, labels, gamma)
    return loss


def run_gradcheck(
    cfg: Optional[SmtConfig] = None,
    seed: int = 0,
    gamma: float = 2.0,
    h: float = 1e-5,
    batch: int = 3,
) -> List[GradCheckEntry]:
    """Compare analytic gradients against central differences, parameter
    by parameter, on a tiny random model and batch."""
    cfg = cfg or SmtConfig(window=8, modalities=4, d_model=4, heads=2, pos_frequencies=2)
    rng = np.random.default_rng(seed)
    windows = rng.standard_normal((batch, cfg.window, cfg.modalities))
    statics = rng.standard_normal((batch, cfg.static_dim))
    semis = rng.standard_normal((batch, cfg.semistatic_dim))
    labels = rng.integers(0, cfg.classes, size=batch)
    data = (windows, statics, semis, labels)
    norm = NormStats.identity(cfg)

    params = init_params(cfg, seed + 1)
    # Zero-initialized tensors (biases, positional u/v) would make some
    # gradients vanish identically; perturb everything so no check is vacuous.
    for tensor in params.values():
        tensor += 0.3 * rng.standard_normal(tensor.shape)
    probs, cache = forward(windows, statics, semis, params, cfg, norm)
    _, d_logits = focal_loss_grad_logits(probs, labels, gamma)
    grads = backward(d_logits, cache, params)

    report = []
    for name, tensor in params.items():
        flat = tensor.reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _loss_of(params, data, cfg, norm, gamma)
            flat[i] = orig - h
            down = _loss_of(params, data, cfg, norm, gamma)
            flat[i] = orig
            fd = (up - down) / (2.0 * h)
            an = grads[name].reshape(-1)[i]
            rel = abs(an - fd) / max(abs(an) + abs(fd), 1e-8)
            worst = max(worst, rel)
        report.append(GradCheckEntry(name=name, max_rel_err=worst, checked=flat.size))
    return report


def format_report(report: List[GradCheckEntry], tol: float = 1e-4) -> str:
    lines = []
    for entry in report:
        status = "ok" if entry.max_rel_err < tol else "FAIL"
        lines.append(f"{entry.name:<12} {entry.checked:>5} params  max rel err {entry.max_rel_err:.3e}  {status}")
    return "\n".join(lines)
