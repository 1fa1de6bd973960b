"""Evaluation metrics: confusion matrix, per-class precision/recall/F1, averages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PipelineError


def confusion_matrix(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    class_count: int,
) -> np.ndarray:
    """Entry (i, j) counts samples with true class i predicted as j."""
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    if yt.shape != yp.shape or yt.ndim != 1:
        raise PipelineError("LENGTH_MISMATCH", f"shapes {yt.shape} vs {yp.shape}")
    for arr, name in ((yt, "y_true"), (yp, "y_pred")):
        if arr.size and (arr.min() < 0 or arr.max() >= class_count):
            raise PipelineError("INDEX_OUT_OF_RANGE", f"{name} has index outside [0, {class_count})")
    m = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(m, (yt, yp), 1)
    return m


@dataclass(frozen=True, eq=False)
class ClassReport:
    """Per-class precision/recall/F1 with macro, weighted and overall accuracy.

    Zero-denominator metrics are 0.0 by convention; the classes where that
    happened are listed in degenerate_classes.
    """

    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    support: tuple[int, ...]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    degenerate_classes: tuple[int, ...]

    def to_dict(self, class_names: Sequence[str] | None = None) -> dict:
        names = list(class_names) if class_names else [str(i) for i in range(len(self.support))]
        return {
            "classes": [
                {
                    "class": names[c],
                    "precision": self.precision[c],
                    "recall": self.recall[c],
                    "f1": self.f1[c],
                    "support": self.support[c],
                }
                for c in range(len(self.support))
            ],
            "accuracy": self.accuracy,
            "macro_avg": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted_avg": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "degenerate_classes": [names[c] for c in self.degenerate_classes],
        }

    def to_text(self, class_names: Sequence[str] | None = None) -> str:
        """Plain-text table, 2-decimal rounding (raw values stay full precision)."""
        names = list(class_names) if class_names else [str(i) for i in range(len(self.support))]
        width = max(12, *(len(n) for n in names))
        lines = [f"{'class':<{width}}  precision  recall  f1      support"]
        for c in range(len(self.support)):
            lines.append(
                f"{names[c]:<{width}}  {self.precision[c]:>9.2f}  {self.recall[c]:>6.2f}"
                f"  {self.f1[c]:>6.2f}  {self.support[c]:>7d}"
            )
        lines.append(
            f"{'macro avg':<{width}}  {self.macro_precision:>9.2f}  {self.macro_recall:>6.2f}"
            f"  {self.macro_f1:>6.2f}  {sum(self.support):>7d}"
        )
        lines.append(
            f"{'weighted avg':<{width}}  {self.weighted_precision:>9.2f}"
            f"  {self.weighted_recall:>6.2f}  {self.weighted_f1:>6.2f}  {sum(self.support):>7d}"
        )
        lines.append(f"accuracy: {self.accuracy:.2f}")
        return "\n".join(lines) + "\n"


def report_from_confusion(matrix: np.ndarray) -> ClassReport:
    """Build the full report from a confusion matrix."""
    m = np.asarray(matrix, dtype=np.int64)
    c = m.shape[0]
    n = int(m.sum())
    if n == 0:
        raise PipelineError("EMPTY_INPUT", "confusion matrix has no samples")
    tp = np.diag(m).astype(float)
    pred_totals = m.sum(axis=0).astype(float)
    true_totals = m.sum(axis=1).astype(float)

    degenerate = []
    precision = np.zeros(c)
    recall = np.zeros(c)
    f1 = np.zeros(c)
    for k in range(c):
        if pred_totals[k] > 0:
            precision[k] = tp[k] / pred_totals[k]
        else:
            degenerate.append(k)
        if true_totals[k] > 0:
            recall[k] = tp[k] / true_totals[k]
        elif k not in degenerate:
            degenerate.append(k)
        if precision[k] + recall[k] > 0:
            f1[k] = 2 * precision[k] * recall[k] / (precision[k] + recall[k])

    support = true_totals
    weights = support / n
    return ClassReport(
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        support=tuple(int(s) for s in support),
        accuracy=float(tp.sum() / n),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * weights).sum()),
        weighted_recall=float((recall * weights).sum()),
        weighted_f1=float((f1 * weights).sum()),
        degenerate_classes=tuple(sorted(degenerate)),
    )


def classification_report(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    class_count: int,
) -> ClassReport:
    return report_from_confusion(confusion_matrix(y_true, y_pred, class_count))
