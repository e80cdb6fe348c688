"""Deterministic full-batch gradient-descent training and k-fold splits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import Params, SmtConfig, init_params
from .loss import class_weights, focal_loss_grad_logits
from .model import NormStats, backward, forward


@dataclass
class Dataset:
    """Labeled windows: windows (N, n, m), statics (N, s), semis (N, ss),
    labels (N,) in {0 low, 1 moderate, 2 high}."""

    windows: np.ndarray
    statics: np.ndarray
    semistatics: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.windows[idx], self.statics[idx], self.semistatics[idx], self.labels[idx])


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    learning_rate: float = 0.2
    gamma: float = 2.0
    seed: int = 0
    report_every: int = 50


@dataclass
class TrainResult:
    params: Params
    norm: NormStats
    alpha: np.ndarray
    history: List[Dict] = field(default_factory=list)

    @property
    def final(self) -> Dict:
        return self.history[-1]


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float((probs.argmax(axis=1) == labels).mean())


def train(
    dataset: Dataset,
    cfg: SmtConfig,
    tcfg: Optional[TrainConfig] = None,
    val: Optional[Dataset] = None,
) -> TrainResult:
    """Plain gradient descent with a fixed step; bit-deterministic per seed."""
    tcfg = tcfg or TrainConfig()
    for name, arr in (("windows", dataset.windows), ("statics", dataset.statics), ("semistatics", dataset.semistatics)):
        if not np.isfinite(arr).all():
            raise ValueError(f"dataset {name} contain non-finite values")
    alpha = class_weights(dataset.labels, cfg.classes)
    norm = NormStats.fit(dataset.windows, dataset.statics, dataset.semistatics)
    params = init_params(cfg, tcfg.seed)
    history: List[Dict] = []

    for step in range(1, tcfg.steps + 1):
        probs, cache = forward(dataset.windows, dataset.statics, dataset.semistatics, params, cfg, norm)
        loss, d_logits = focal_loss_grad_logits(probs, dataset.labels, tcfg.gamma, alpha)
        grads = backward(d_logits, cache, params)
        for name, g in grads.items():
            params[name] = params[name] - tcfg.learning_rate * g

        if step % tcfg.report_every == 0 or step == tcfg.steps:
            entry = {"step": step, "train_loss": loss, "train_acc": accuracy(probs, dataset.labels)}
            if val is not None and len(val):
                vprobs, _ = forward(val.windows, val.statics, val.semistatics, params, cfg, norm)
                vloss, _ = focal_loss_grad_logits(vprobs, val.labels, tcfg.gamma, alpha)
                entry["val_loss"] = vloss
                entry["val_acc"] = accuracy(vprobs, val.labels)
            history.append(entry)

    return TrainResult(params=params, norm=norm, alpha=alpha, history=history)


def stratified_kfold(labels: np.ndarray, k: int, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    """k (train_idx, val_idx) pairs with per-class proportions preserved."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        rng.shuffle(members)
        for i, idx in enumerate(members):
            folds[i % k].append(int(idx))
    splits = []
    for i in range(k):
        val_idx = np.array(sorted(folds[i]), dtype=int)
        train_idx = np.array(sorted(x for j, f in enumerate(folds) if j != i for x in f), dtype=int)
        splits.append((train_idx, val_idx))
    return splits


def cross_validate(
    dataset: Dataset,
    cfg: SmtConfig,
    tcfg: Optional[TrainConfig] = None,
    k: int = 5,
    seed: int = 0,
) -> List[Dict]:
    results = []
    for fold, (tr, va) in enumerate(stratified_kfold(dataset.labels, k, seed)):
        res = train(dataset.subset(tr), cfg, tcfg, val=dataset.subset(va))
        entry = dict(res.final)
        entry["fold"] = fold
        results.append(entry)
    return results
