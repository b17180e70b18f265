"""Binary ground/non-ground metrics with micro aggregation across scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..errors import EvaluationError
from ..io import LabelMapping


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise EvaluationError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_tuple(self):
        return (self.tp, self.fp, self.tn, self.fn)


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    miou: float
    runtime_ms: Optional[float] = None
    counts: ConfusionCounts = field(default_factory=ConfusionCounts)
    aggregation: str = "micro"

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "miou": self.miou,
            "runtime_ms": self.runtime_ms,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "tn": self.counts.tn,
            "fn": self.counts.fn,
        }


def _ratio(num: int, den: int) -> float:
    # an empty denominator means the quantity has no failures to count
    return 1.0 if den == 0 else num / den


def report_from_counts(counts: ConfusionCounts, runtime_ms: Optional[float] = None) -> MetricReport:
    tp, fp, tn, fn = counts.as_tuple()
    iou_ground = _ratio(tp, tp + fp + fn)
    iou_non = _ratio(tn, tn + fp + fn)
    return MetricReport(
        precision=_ratio(tp, tp + fp),
        recall=_ratio(tp, tp + fn),
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        miou=0.5 * (iou_ground + iou_non),
        runtime_ms=runtime_ms,
        counts=counts,
    )


def confusion_counts(predicted, truth_ground, valid=None) -> ConfusionCounts:
    pred = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth_ground, dtype=bool)
    if pred.shape != truth.shape:
        raise EvaluationError(f"length mismatch: {pred.shape[0] if pred.ndim else 0} predictions vs {truth.shape[0] if truth.ndim else 0} labels")
    if valid is not None:
        pred, truth = pred[valid], truth[valid]
    if pred.size == 0:
        raise EvaluationError("no evaluable points")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(pred.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, tn, fn)


def compute_metrics(predicted, truth, mapping: Optional[LabelMapping] = None):
    """Score predictions against ground truth.

    ``truth`` holds semantic class ids when ``mapping`` is given (points in
    the ignore set are dropped), otherwise a boolean ground mask.
    Returns ``(ConfusionCounts, MetricReport)``.
    """
    pred = np.asarray(predicted, dtype=bool).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise EvaluationError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if mapping is None:
        counts = confusion_counts(pred, truth.astype(bool))
    else:
        valid = ~mapping.ignore_mask(truth)
        counts = confusion_counts(pred, mapping.ground_mask(truth), valid)
    return counts, report_from_counts(counts)


def aggregate_metrics(per_scan: Iterable[ConfusionCounts], runtime_ms: Optional[float] = None) -> MetricReport:
    """Micro aggregation: sum the counts, then score once."""
    total = ConfusionCounts()
    n = 0
    for c in per_scan:
        total = total + c
        n += 1
    if n == 0:
        raise EvaluationError("aggregate_metrics needs at least one scan")
    return report_from_counts(total, runtime_ms)


REPORT_COLUMNS = ("precision", "recall", "f1", "accuracy", "miou", "runtime_ms")


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def format_table(rows, columns) -> str:
    """Aligned plain-text table; ``rows`` is a list of dicts."""
    cells = [[str(c) for c in columns]] + [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[k]) for row in cells) for k in range(len(columns))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(v.rjust(w) if n else v.ljust(w) for v, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_csv(rows, columns) -> str:
    out = [",".join(columns)]
    for r in rows:
        out.append(",".join("" if r.get(c) is None else repr(r.get(c)) if isinstance(r.get(c), float) else str(r.get(c)) for c in columns))
    return "\n".join(out) + "\n"


def report_table(named_reports, fmt: str = "text") -> str:
    """One row per method or dataset name, values in percent."""
    cols = ("name",) + REPORT_COLUMNS + ("tp", "fp", "tn", "fn")
    rows = []
    for name, rep in named_reports:
        d = rep.as_dict()
        if fmt == "text":
            for k in ("precision", "recall", "f1", "accuracy", "miou"):
                d[k] = 100.0 * d[k]
        rows.append({"name": name, **d})
    if fmt == "csv":
        return format_csv(rows, cols)
    note = "metrics aggregated micro (confusion counts summed over scans); percentages"
    return format_table(rows, cols) + "\n" + note
