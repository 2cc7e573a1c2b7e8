"""Scoring of predicted class masks against ground truth.

Per-image metrics are a 3x3 confusion matrix, pixel accuracy and one IoU per
class. A class absent from both masks has no meaningful IoU; it is reported
as undefined (None) and excluded from aggregation rather than counted as a
vacuous 1.0, which would inflate the means. A class present in exactly one
mask scores 0. Aggregation is the unweighted mean of per-image IoU over the
images where the value is defined; a pooled-pixel variant (one IoU from the
summed confusion matrix) is available behind a flag and labeled as such.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import CLAY, PORE, SILT, CLASS_NAMES, ClassMask

#: Per-image IoU above this is conventionally a true positive detection.
TRUE_POSITIVE_IOU = 0.5


class MetricsError(ValueError):
    pass


def confusion(pred: ClassMask, truth: ClassMask) -> np.ndarray:
    """3x3 pixel tally, rows = truth class, columns = predicted class."""
    if pred.labels.shape != truth.labels.shape:
        raise MetricsError(
            f"dimension mismatch: pred {pred.labels.shape} vs truth {truth.labels.shape}"
        )
    joint = 3 * truth.labels.astype(np.int64) + pred.labels
    return np.bincount(joint.ravel(), minlength=9).reshape(3, 3)


def pixel_accuracy(cm: np.ndarray) -> float:
    """Correctly labeled pixels over all pixels."""
    total = cm.sum()
    if total == 0:
        raise MetricsError("empty confusion matrix")
    return float(np.trace(cm) / total)


def class_iou(cm: np.ndarray, c: int) -> float | None:
    """TP / (TP + FP + FN) for class c; None when c is absent from both masks."""
    tp = cm[c, c]
    denom = cm[c, :].sum() + cm[:, c].sum() - tp
    if denom == 0:
        return None
    return float(tp / denom)


@dataclass(frozen=True)
class ImageEval:
    image_id: str
    iou: dict  # class code -> float | None
    pixel_accuracy: float
    true_positive: dict  # class code -> bool | None (IoU > 0.5)


@dataclass(frozen=True)
class EvalReport:
    per_image: list
    mean_iou: dict  # class code -> float | None
    overall_pixel_accuracy: float
    pooled_iou: dict | None = None  # only when requested; pooled-pixel variant


def evaluate_pair(pred: ClassMask, truth: ClassMask, image_id: str) -> ImageEval:
    cm = confusion(pred, truth)
    iou = {c: class_iou(cm, c) for c in (CLAY, SILT, PORE)}
    tp = {c: (None if v is None else v > TRUE_POSITIVE_IOU) for c, v in iou.items()}
    return ImageEval(image_id, iou, pixel_accuracy(cm), tp)


def evaluate_set(pairs, pooled: bool = False) -> EvalReport:
    """Score (pred, truth, image_id) triples and aggregate over images."""
    pairs = list(pairs)
    if not pairs:
        raise MetricsError("evaluate_set needs at least one (pred, truth, id) pair")
    per_image = []
    cm_total = np.zeros((3, 3), dtype=np.int64)
    for pred, truth, image_id in pairs:
        per_image.append(evaluate_pair(pred, truth, image_id))
        cm_total += confusion(pred, truth)
    mean_iou = {}
    for c in (CLAY, SILT, PORE):
        defined = [ev.iou[c] for ev in per_image if ev.iou[c] is not None]
        mean_iou[c] = float(np.mean(defined)) if defined else None
    report = EvalReport(
        per_image=per_image,
        mean_iou=mean_iou,
        overall_pixel_accuracy=pixel_accuracy(cm_total),
        pooled_iou={c: class_iou(cm_total, c) for c in (CLAY, SILT, PORE)} if pooled else None,
    )
    return report


def _num(x) -> str:
    return "" if x is None else repr(x)


def write_report(report: EvalReport, path, format: str = "json") -> None:
    """Write an EvalReport as JSON or CSV with a stable field order."""
    if not report.per_image:
        raise MetricsError("refusing to write an empty report")
    p = Path(path)
    if format == "csv":
        lines = ["image,iou_clay,iou_silt,iou_pore,pixel_accuracy"]
        for ev in report.per_image:
            lines.append(
                f"{ev.image_id},{_num(ev.iou[CLAY])},{_num(ev.iou[SILT])},"
                f"{_num(ev.iou[PORE])},{_num(ev.pixel_accuracy)}"
            )
        p.write_text("\n".join(lines) + "\n", "utf-8")
    elif format == "json":
        payload = {
            "images": [
                {
                    "image": ev.image_id,
                    **{f"iou_{CLASS_NAMES[c]}": ev.iou[c] for c in (CLAY, SILT, PORE)},
                    "pixel_accuracy": ev.pixel_accuracy,
                    **{
                        f"true_positive_{CLASS_NAMES[c]}": ev.true_positive[c]
                        for c in (CLAY, SILT, PORE)
                    },
                }
                for ev in report.per_image
            ],
            "aggregate": {
                **{f"mean_iou_{CLASS_NAMES[c]}": report.mean_iou[c] for c in (CLAY, SILT, PORE)},
                "overall_pixel_accuracy": report.overall_pixel_accuracy,
            },
        }
        if report.pooled_iou is not None:
            payload["aggregate"]["pooled_iou"] = {
                CLASS_NAMES[c]: report.pooled_iou[c] for c in (CLAY, SILT, PORE)
            }
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    else:
        raise MetricsError(f"unknown report format '{format}'")
