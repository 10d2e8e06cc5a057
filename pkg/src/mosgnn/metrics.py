"""Node-level confusion counting and derived classification metrics.

The moving class (label 1) is the positive class. Zero-denominator
conventions: precision is 0 when tp + fp = 0, recall is 0 when tp + fn = 0,
and the F-measure is 0 when precision + recall = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, EvaluationError

__all__ = ["MetricsResult", "CategoryReport", "confusion_counts",
           "precision_recall_f", "category_report", "mean_f_measure",
           "format_category_table"]


@dataclass(frozen=True)
class MetricsResult:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f_measure: float

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall,
                "f_measure": self.f_measure}


def confusion_counts(pred, gt, mask=None) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) over masked-in nodes, positive class = 1."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape or pred.ndim != 1:
        raise DimensionError(f"confusion_counts: prediction shape {pred.shape} does not "
                             f"match ground truth {gt.shape}")
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != pred.shape:
        raise DimensionError("confusion_counts: mask length mismatch")
    if not mask.any():
        raise EvaluationError("confusion_counts: empty evaluation mask")
    p = pred[mask].astype(np.int64)
    g = gt[mask].astype(np.int64)
    for name, arr in (("prediction", p), ("ground truth", g)):
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise DataError(f"confusion_counts: non-binary {name} value under the mask")
    tp = int(np.sum((p == 1) & (g == 1)))
    fp = int(np.sum((p == 1) & (g == 0)))
    fn = int(np.sum((p == 0) & (g == 1)))
    tn = int(np.sum((p == 0) & (g == 0)))
    return tp, fp, fn, tn


def precision_recall_f(counts) -> MetricsResult:
    """Precision, recall and F-measure (harmonic mean) from raw counts."""
    tp, fp, fn, tn = (int(c) for c in counts)
    if min(tp, fp, fn, tn) < 0:
        raise DataError("precision_recall_f: negative count")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall > 0.0:
        f = 2.0 * precision * recall / (precision + recall)
    else:
        f = 0.0
    return MetricsResult(tp, fp, fn, tn, precision, recall, f)


def mean_f_measure(values) -> float:
    """Unweighted mean of per-category F values (the overall column)."""
    values = list(values)
    if not values:
        raise EvaluationError("mean_f_measure: no category values")
    return float(sum(values) / len(values))


@dataclass(frozen=True)
class CategoryReport:
    per_category: dict[str, MetricsResult]
    overall_mean_f: float

    def to_dict(self) -> dict:
        return {"per_category": {k: v.to_dict() for k, v in sorted(self.per_category.items())},
                "overall_mean_f": self.overall_mean_f}


def category_report(pred, gt, categories, mask=None, allowed=None) -> CategoryReport:
    """Pooled per-category counts, then the unweighted mean of category F values.

    ``categories`` holds one tag per node. When ``allowed`` is given, any tag
    outside it is a data error.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if len(categories) != pred.shape[0]:
        raise DimensionError("category_report: one category tag per node required")
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if allowed is not None:
        unknown = sorted(set(categories) - set(allowed))
        if unknown:
            raise DataError(f"category_report: unknown category tags {unknown}")
    tags = np.asarray(categories, dtype=object)
    per: dict[str, MetricsResult] = {}
    for tag in sorted(set(tags[mask])):
        sel = mask & (tags == tag)
        per[str(tag)] = precision_recall_f(confusion_counts(pred, gt, sel))
    if not per:
        raise EvaluationError("category_report: empty evaluation mask")
    overall = mean_f_measure(r.f_measure for r in per.values())
    return CategoryReport(per, overall)


def format_category_table(report: CategoryReport) -> str:
    """Aligned plain-text table: one row per category plus the overall mean."""
    rows = [("category", "tp", "fp", "fn", "tn", "precision", "recall", "f_measure")]
    for tag, r in sorted(report.per_category.items()):
        rows.append((tag, str(r.tp), str(r.fp), str(r.fn), str(r.tn),
                     f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.f_measure:.4f}"))
    rows.append(("overall", "", "", "", "", "", "", f"{report.overall_mean_f:.4f}"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
