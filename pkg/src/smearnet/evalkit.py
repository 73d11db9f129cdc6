"""Confusion matrix, per-class precision/recall/F1/support, and curve export.

Rows of the confusion matrix are true classes and columns are predictions,
both ordered ``(normal, cancer)``. Ratios whose denominator is zero are
reported as 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInput, IoFailure, LengthMismatch

CLASSES = ("normal", "cancer")
CURVE_HEADER = ("epoch", "train_acc", "val_acc", "train_loss", "val_loss")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: tuple  # ((tn, fp), (fn, tp)) with cancer as the positive class
    class_names: tuple = CLASSES

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    @property
    def trace(self) -> int:
        return self.counts[0][0] + self.counts[1][1]

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict
    accuracy: float
    matrix: ConfusionMatrix

    def to_json(self) -> dict:
        return {
            "matrix": [list(row) for row in self.matrix.counts],
            "classes": list(self.matrix.class_names),
            "per_class": {
                name: {"precision": m.precision, "recall": m.recall,
                       "f1": m.f1, "support": m.support}
                for name, m in self.per_class.items()
            },
            "accuracy": self.accuracy,
        }


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64).reshape(-1)
    p = np.asarray(predicted_labels, dtype=np.int64).reshape(-1)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} true labels vs {p.size} predictions")
    if t.size == 0:
        raise EmptyInput("cannot build a confusion matrix from no samples")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("labels must be 0 (normal) or 1 (cancer)")
    counts = np.bincount(2 * t + p, minlength=4).reshape(2, 2)
    return ConfusionMatrix(tuple(tuple(int(v) for v in row) for row in counts))


def report(matrix: ConfusionMatrix) -> MetricsReport:
    c = matrix.counts
    total = matrix.total
    if total <= 0:
        raise EmptyInput("confusion matrix is empty")
    per_class = {}
    for k, name in enumerate(matrix.class_names):
        tp = c[k][k]
        predicted = c[0][k] + c[1][k]
        support = c[k][0] + c[k][1]
        precision = _ratio(tp, predicted)
        recall = _ratio(tp, support)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[name] = ClassMetrics(precision, recall, f1, support)
    return MetricsReport(per_class, matrix.trace / total, matrix)


def format_table(rep: MetricsReport, digits: int = 2) -> str:
    """Per-class table with precision, recall, f1-score and support columns."""
    width = max(len(n) for n in rep.per_class) + 2
    head = f"{'':<{width}}{'precision':>10}{'recall':>10}{'f1-score':>10}{'support':>10}"
    lines = [head]
    for name, m in rep.per_class.items():
        lines.append(f"{name:<{width}}{m.precision:>10.{digits}f}{m.recall:>10.{digits}f}"
                     f"{m.f1:>10.{digits}f}{m.support:>10d}")
    lines.append(f"{'accuracy':<{width}}{'':>20}{rep.accuracy:>10.{digits}f}"
                 f"{rep.matrix.total:>10d}")
    return "\n".join(lines)


def format_matrix(matrix: ConfusionMatrix) -> str:
    names = matrix.class_names
    width = max(len(n) for n in names) + 7
    corner = "true/pred"
    lines = [f"{corner:<{width}}" + "".join(f"{n:>10}" for n in names)]
    for name, row in zip(names, matrix.counts):
        lines.append(f"{name:<{width}}" + "".join(f"{v:>10d}" for v in row))
    return "\n".join(lines)


def export_report(rep: MetricsReport, path) -> None:
    text = json.dumps(rep.to_json(), indent=2) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def export_curves(records, path) -> None:
    """Accuracy/loss curves, one row per epoch."""
    records = list(records)
    if not records:
        raise EmptyInput("no epoch records to export")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            for r in records:
                w.writerow([r.epoch, repr(r.train_accuracy), repr(r.val_accuracy),
                            repr(r.train_loss), repr(r.val_loss)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
