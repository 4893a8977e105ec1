"""Object-detection quality metrics: IoU, greedy matching, AP and mAP.

Boxes are continuous axis-aligned rectangles (no pixel convention: the box
(0, 0, 2, 2) has area 4). Matching is the usual greedy pass in descending
confidence within each (image, class) pair, and average precision integrates
the monotone precision envelope over recall. The integration runs as an
explicit left-to-right loop so its floating-point result is reproducible
term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, UndefinedMetricError, ValidationError


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValidationError(f"box coordinates must be finite, got {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"box must have positive extent, got {coords}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_id: str
    box: Box


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: str
    confidence: float
    box: Box

    def __post_init__(self):
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ValidationError(
                f"confidence must lie in [0, 1], got {self.confidence}")


def iou(a: Box, b: Box) -> float:
    """Intersection area over union area; 0 when the boxes do not overlap."""
    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class MatchResult:
    """Greedy matching outcome.

    ``labels`` aligns with the detections as given (True marks a true
    positive); the confidence-sorted traversal order is internal.
    """

    labels: tuple[bool, ...]
    num_ground_truths: int

    @property
    def num_true_positives(self) -> int:
        return sum(self.labels)

    @property
    def num_unmatched_ground_truths(self) -> int:
        return self.num_ground_truths - self.num_true_positives


def _check_threshold(iou_threshold: float):
    if not (0.0 < iou_threshold <= 1.0):
        raise ConfigError(f"iou_threshold must lie in (0, 1], got {iou_threshold}")


def match_detections(detections: list[Detection], ground_truths: list[GroundTruth],
                     iou_threshold: float = 0.5) -> MatchResult:
    """Match detections to ground truths greedily, most confident first.

    Ties in confidence fall back to input order; a ground truth can absorb
    only one detection; candidates are restricted to the same image and class.
    A detection is a true positive when its best-IoU unmatched candidate
    reaches the threshold (equal IoUs resolve to the earliest ground truth).
    """
    _check_threshold(iou_threshold)
    by_group: dict[tuple[str, str], list[int]] = {}
    for gi, gt in enumerate(ground_truths):
        by_group.setdefault((gt.image_id, gt.class_id), []).append(gi)

    taken = [False] * len(ground_truths)
    labels = [False] * len(detections)
    order = sorted(range(len(detections)),
                   key=lambda i: -detections[i].confidence)
    for di in order:
        det = detections[di]
        best_iou = 0.0
        best_gi = -1
        for gi in by_group.get((det.image_id, det.class_id), ()):
            if taken[gi]:
                continue
            overlap = iou(det.box, ground_truths[gi].box)
            if overlap > best_iou:
                best_iou = overlap
                best_gi = gi
        if best_gi >= 0 and best_iou >= iou_threshold:
            taken[best_gi] = True
            labels[di] = True
    return MatchResult(labels=tuple(labels), num_ground_truths=len(ground_truths))


def _precision_envelope(precisions: list[float]) -> list[float]:
    env = list(precisions)
    for i in range(len(env) - 2, -1, -1):
        if env[i + 1] > env[i]:
            env[i] = env[i + 1]
    return env


def average_precision(labels_by_confidence: list[bool], num_ground_truths: int,
                      *, eleven_point: bool = False) -> float:
    """AP for one class from match labels already sorted by descending
    confidence.

    The default integrates precision-over-recall with the precision envelope
    (every recall step contributes); ``eleven_point=True`` instead averages
    the envelope at the eleven recall levels 0.0, 0.1, ..., 1.0.
    """
    if num_ground_truths < 1:
        raise UndefinedMetricError("AP needs at least one ground truth")
    if not labels_by_confidence:
        return 0.0

    tp = 0
    precisions: list[float] = []
    recalls: list[float] = []
    for rank, is_tp in enumerate(labels_by_confidence, start=1):
        if is_tp:
            tp += 1
        precisions.append(tp / rank)
        recalls.append(tp / num_ground_truths)
    env = _precision_envelope(precisions)

    if eleven_point:
        total = 0.0
        for level in range(11):
            target = level / 10.0
            best = 0.0
            for r, p in zip(recalls, env):
                if r >= target:
                    best = p
                    break
            total += best
        return total / 11.0

    ap = 0.0
    prev_recall = 0.0
    for r, p in zip(recalls, env):
        ap += (r - prev_recall) * p
        prev_recall = r
    return ap


@dataclass(frozen=True)
class DetectionReport:
    iou_threshold: float
    per_class_ap: dict
    mean_ap: float
    precision: float
    recall: float
    true_positives: int
    false_positives: int
    num_ground_truths: int


def evaluate_detections(detections: list[Detection],
                        ground_truths: list[GroundTruth],
                        iou_threshold: float = 0.5,
                        *, eleven_point: bool = False) -> DetectionReport:
    """Score a detection set: per-class AP, their mean, and micro P/R.

    Only classes that appear in the ground truth get an AP (and enter the
    mean); detections for absent classes still count as false positives in
    the micro precision. No ground truths at all leaves every recall-based
    quantity undefined, which raises UndefinedMetricError.
    """
    _check_threshold(iou_threshold)
    if not ground_truths:
        raise UndefinedMetricError("cannot score detections without ground truths")

    match = match_detections(detections, ground_truths, iou_threshold)
    tp = match.num_true_positives
    fp = len(detections) - tp

    classes = sorted({gt.class_id for gt in ground_truths}, key=str)
    per_class_ap = {}
    for cls in classes:
        cls_dets = [(d, lab) for d, lab in zip(detections, match.labels)
                    if d.class_id == cls]
        cls_dets.sort(key=lambda pair: -pair[0].confidence)
        labels = [lab for _, lab in cls_dets]
        num_gt = sum(1 for gt in ground_truths if gt.class_id == cls)
        per_class_ap[cls] = average_precision(labels, num_gt,
                                              eleven_point=eleven_point)

    return DetectionReport(
        iou_threshold=iou_threshold,
        per_class_ap=per_class_ap,
        mean_ap=sum(per_class_ap.values()) / len(per_class_ap),
        precision=tp / len(detections) if detections else 0.0,
        recall=tp / match.num_ground_truths,
        true_positives=tp,
        false_positives=fp,
        num_ground_truths=match.num_ground_truths,
    )


# ---------------------------------------------------------------------------
# Plain-text interchange files, one record per line, whitespace separated.

def _parse_lines(path: str | Path, expected_tokens: int):
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != expected_tokens:
            raise ValidationError(
                f"{path}:{lineno}: expected {expected_tokens} fields, got {len(tokens)}")
        yield lineno, tokens


def _floats(path, lineno: int, tokens: list[str]) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"{path}:{lineno}: {exc}") from None


def load_ground_truths(path: str | Path) -> list[GroundTruth]:
    """Read ``image_id class_id x_min y_min x_max y_max`` lines."""
    records = []
    for lineno, tokens in _parse_lines(path, 6):
        coords = _floats(path, lineno, tokens[2:])
        try:
            box = Box(*coords)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        records.append(GroundTruth(tokens[0], tokens[1], box))
    return records


def load_detections(path: str | Path) -> list[Detection]:
    """Read ``image_id class_id confidence x_min y_min x_max y_max`` lines."""
    records = []
    for lineno, tokens in _parse_lines(path, 7):
        numbers = _floats(path, lineno, tokens[2:])
        try:
            record = Detection(tokens[0], tokens[1], numbers[0], Box(*numbers[1:]))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        records.append(record)
    return records
