from .extract import (
    DEFAULT_LEXICON,
    DEFAULT_RANGES,
    OCR_VITALS,
    ExtractConfig,
    ExtractedValue,
    Extraction,
    LexiconError,
    Rect,
    TextBox,
    build_lexicon,
    expand_region,
    extract,
    find_anchors,
    normalize_label,
    parse_numeric,
    select_value,
)
from .evaluate import EvaluationError, VitalMetrics, evaluate, format_metrics, parse_truth
from .batchrun import (
    BatchFailure,
    DetectionFileError,
    batch_extract,
    parse_detections,
    read_detection_file,
    write_detection_file,
)

__all__ = [name for name in dir() if not name.startswith("_")]
