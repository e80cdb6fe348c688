"""Detection-file IO and parallel batch extraction.

Detection files are line-oriented: `text<TAB>confidence<TAB>x<TAB>y<TAB>w<TAB>h`,
one box per line; the image id is the file stem.  Batch extraction fans
out across a worker pool and merges deterministically by image id, so the
worker count never changes the result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .extract import ExtractConfig, Extraction, TextBox, extract

DETECTION_SUFFIX = ".tsv"


class DetectionFileError(ValueError):
    pass


@dataclass(frozen=True)
class BatchFailure:
    path: Path
    error: str


def parse_detections(text: str, source: str = "<memory>") -> List[TextBox]:
    boxes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise DetectionFileError(f"{source}:{lineno}: expected 6 tab-separated fields")
        try:
            boxes.append(
                TextBox(
                    text=parts[0],
                    confidence=float(parts[1]),
                    x=float(parts[2]),
                    y=float(parts[3]),
                    w=float(parts[4]),
                    h=float(parts[5]),
                )
            )
        except ValueError as exc:
            raise DetectionFileError(f"{source}:{lineno}: {exc}") from exc
    return boxes


def read_detection_file(path: Path) -> List[TextBox]:
    return parse_detections(path.read_text(), source=str(path))


def write_detection_file(path: Path, boxes: Sequence[TextBox]) -> None:
    lines = [f"{b.text}\t{b.confidence}\t{b.x}\t{b.y}\t{b.w}\t{b.h}" for b in boxes]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def batch_extract(
    detections_dir: Path,
    workers: int = 1,
    config: Optional[ExtractConfig] = None,
) -> Tuple[List[Extraction], List[BatchFailure]]:
    """Extract every detection file in a directory; per-file failures are
    collected instead of aborting the batch."""
    paths = sorted(Path(detections_dir).glob(f"*{DETECTION_SUFFIX}"))

    def one(path: Path):
        boxes = read_detection_file(path)
        return extract(boxes, config, image_id=path.stem)

    results: List[Extraction] = []
    failures: List[BatchFailure] = []
    if workers <= 1:
        for path in paths:
            try:
                results.append(one(path))
            except DetectionFileError as exc:
                failures.append(BatchFailure(path, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(path, pool.submit(one, path)) for path in paths]
            for path, future in futures:
                try:
                    results.append(future.result())
                except DetectionFileError as exc:
                    failures.append(BatchFailure(path, str(exc)))
    results.sort(key=lambda e: e.image_id)
    failures.sort(key=lambda f: str(f.path))
    return results, failures
