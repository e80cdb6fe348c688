"""Spatial extraction of vital values from text-detection output.

Works on detector output (boxes + strings + confidences), not pixels.
For each vital: find a label box from the anchor lexicon, expand a search
region around it, then pick the largest plausible numeric box inside.
On real monitors the live value is drawn much larger than nearby limit
and trend figures, so box area is the discriminator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

OCR_VITALS = ("hr", "spo2", "rr")

# Physiologically generous acceptance ranges (natural units, inclusive).
DEFAULT_RANGES: Dict[str, Tuple[int, int]] = {
    "hr": (40, 250),
    "spo2": (50, 100),
    "rr": (5, 120),
}

DEFAULT_LEXICON: Dict[str, frozenset] = {
    "hr": frozenset({"HR", "ECG", "PR"}),
    "spo2": frozenset({"SPO2", "%SPO2"}),
    "rr": frozenset({"RR", "RESP"}),
}


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class TextBox:
    text: str
    confidence: float
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, px: float, py: float) -> bool:
        return self.x0 <= px <= self.x1 and self.y0 <= py <= self.y1


def normalize_label(text: str) -> str:
    return text.strip().upper()


def build_lexicon(entries: Dict[str, Iterable[str]]) -> Dict[str, frozenset]:
    """Normalize and validate an anchor lexicon (non-empty, disjoint sets)."""
    lex = {vital: frozenset(normalize_label(s) for s in labels) for vital, labels in entries.items()}
    for vital, labels in lex.items():
        if not labels:
            raise LexiconError(f"lexicon for {vital!r} is empty")
    vitals = list(lex)
    for i, a in enumerate(vitals):
        for b in vitals[i + 1 :]:
            overlap = lex[a] & lex[b]
            if overlap:
                raise LexiconError(f"lexicon overlap between {a!r} and {b!r}: {sorted(overlap)}")
    return lex


@dataclass(frozen=True)
class ExtractConfig:
    expand_x: float = 4.0
    expand_y: float = 1.5
    image_w: Optional[float] = None
    image_h: Optional[float] = None
    lexicon: Dict[str, frozenset] = field(default_factory=lambda: dict(DEFAULT_LEXICON))
    ranges: Dict[str, Tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_RANGES))

    def __post_init__(self):
        if self.expand_x <= 0 or self.expand_y <= 0:
            raise ValueError("expansion factors must be positive")


@dataclass(frozen=True)
class ExtractedValue:
    value: int
    box: TextBox
    anchor: TextBox


@dataclass(frozen=True)
class Extraction:
    image_id: str
    values: Dict[str, ExtractedValue]

    def value_of(self, vital: str) -> Optional[int]:
        hit = self.values.get(vital)
        return hit.value if hit else None


def find_anchors(boxes: Sequence[TextBox], lexicon: Dict[str, frozenset]) -> Dict[str, TextBox]:
    """Best label box per vital: highest confidence, then top-most, then left-most."""
    anchors: Dict[str, TextBox] = {}
    for vital, labels in lexicon.items():
        candidates = [b for b in boxes if normalize_label(b.text) in labels]
        if candidates:
            anchors[vital] = min(candidates, key=lambda b: (-b.confidence, b.y, b.x))
    return anchors


def expand_region(
    anchor: TextBox,
    fx: float,
    fy: float,
    image_w: Optional[float] = None,
    image_h: Optional[float] = None,
) -> Rect:
    """Search rectangle around an anchor, clipped to the image."""
    if fx <= 0 or fy <= 0:
        raise ValueError("expansion factors must be positive")
    x0 = anchor.x - fx * anchor.w
    x1 = anchor.x + (1.0 + fx) * anchor.w
    y0 = anchor.y - fy * anchor.h
    y1 = anchor.y + (1.0 + fy) * anchor.h
    x0, y0 = max(0.0, x0), max(0.0, y0)
    if image_w is not None:
        x1 = min(x1, image_w)
    if image_h is not None:
        y1 = min(y1, image_h)
    return Rect(x0, y0, x1, y1)


def parse_numeric(text: str) -> Optional[int]:
    """Integer reading of a detected string; decimals truncate toward zero."""
    s = text.strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return int(float(s))
    except (ValueError, OverflowError):
        return None


def select_value(
    region: Rect,
    boxes: Sequence[TextBox],
    value_range: Tuple[int, int],
    anchor: TextBox,
) -> Optional[Tuple[int, TextBox]]:
    """Largest plausible numeric box whose center lies in the region.

    Area ties break toward the box nearest the anchor center, then by
    position, so selection is a total order.
    """
    lo, hi = value_range
    ax, ay = anchor.center
    best = None
    best_key = None
    for box in boxes:
        value = parse_numeric(box.text)
        if value is None or not lo <= value <= hi:
            continue
        cx, cy = box.center
        if not region.contains(cx, cy):
            continue
        dist2 = (cx - ax) ** 2 + (cy - ay) ** 2
        key = (-box.area, dist2, box.y, box.x)
        if best_key is None or key < best_key:
            best_key = key
            best = (value, box)
    return best


def extract(boxes: Sequence[TextBox], config: Optional[ExtractConfig] = None, image_id: str = "") -> Extraction:
    """anchors -> regions -> value selection, independently per vital."""
    cfg = config or ExtractConfig()
    anchors = find_anchors(boxes, cfg.lexicon)
    values: Dict[str, ExtractedValue] = {}
    for vital, anchor in anchors.items():
        region = expand_region(anchor, cfg.expand_x, cfg.expand_y, cfg.image_w, cfg.image_h)
        hit = select_value(region, boxes, cfg.ranges[vital], anchor)
        if hit is not None:
            value, box = hit
            values[vital] = ExtractedValue(value=value, box=box, anchor=anchor)
    return Extraction(image_id=image_id, values=values)
