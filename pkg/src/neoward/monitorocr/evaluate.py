"""Scoring of extractions against hand-annotated ground truth.

Counting rules (per image, per vital): a correct extraction is a TP; an
extraction with no truth is an FP; a wrong extraction counts as both FP
and FN; truth with no extraction is an FN.  Accuracy is TP over images
that have truth for the vital.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

from .extract import OCR_VITALS, Extraction


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class VitalMetrics:
    tp: int
    fp: int
    fn: int
    images_with_truth: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def accuracy(self) -> float:
        return self.tp / self.images_with_truth if self.images_with_truth else 0.0


def parse_truth(text: str) -> Dict[Tuple[str, str], int]:
    """Parse `image_id<TAB>vital<TAB>value` lines."""
    truth: Dict[Tuple[str, str], int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise EvaluationError(f"truth line {lineno}: expected image_id<TAB>vital<TAB>value")
        image_id, vital, value = parts
        if vital not in OCR_VITALS:
            raise EvaluationError(f"truth line {lineno}: unknown vital {vital!r}")
        truth[(image_id, vital)] = int(value)
    return truth


def evaluate(
    predictions: Sequence[Extraction],
    truth: Dict[Tuple[str, str], int],
) -> Dict[str, VitalMetrics]:
    seen: set = set()
    for pred in predictions:
        if pred.image_id in seen:
            raise EvaluationError(f"duplicate prediction for image {pred.image_id!r}")
        seen.add(pred.image_id)
    missing = {img for img, _ in truth} - seen
    if missing:
        raise EvaluationError(f"truth references unprocessed images: {sorted(missing)}")

    metrics = {}
    for vital in OCR_VITALS:
        tp = fp = fn = with_truth = 0
        for pred in predictions:
            expected = truth.get((pred.image_id, vital))
            got = pred.value_of(vital)
            if expected is not None:
                with_truth += 1
                if got is None:
                    fn += 1
                elif got == expected:
                    tp += 1
                else:
                    fp += 1
                    fn += 1
            elif got is not None:
                fp += 1
        metrics[vital] = VitalMetrics(tp=tp, fp=fp, fn=fn, images_with_truth=with_truth)
    return metrics


def format_metrics(metrics: Dict[str, VitalMetrics]) -> str:
    lines = [f"{'vital':<6} {'P':>6} {'R':>6} {'F1':>6} {'acc':>6} {'tp':>4} {'fp':>4} {'fn':>4}"]
    for vital, m in metrics.items():
        lines.append(
            f"{vital:<6} {m.precision:>6.3f} {m.recall:>6.3f} {m.f1:>6.3f} "
            f"{m.accuracy:>6.3f} {m.tp:>4} {m.fp:>4} {m.fn:>4}"
        )
    return "\n".join(lines)
