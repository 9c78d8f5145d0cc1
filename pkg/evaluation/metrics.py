# evaluation/metrics.py
"""
Accuracy, macro F-score, per-class precision/recall and confusion matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support


@dataclass
class EvalReport:
    """
    Pooled metrics over all test windows, plus the per-fold records they came from.

    `confusion` is row-normalized (rows of classes with no test window are zero);
    `confusion_counts` keeps the raw counts.
    """

    class_names: List[str]
    n: int
    accuracy: float
    macro_f1: float
    confusion_counts: np.ndarray
    precision: Dict[str, float]
    recall: Dict[str, float]
    f1: Dict[str, float]
    support: Dict[str, int]
    folds: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def confusion(self) -> np.ndarray:
        counts = self.confusion_counts.astype(np.float64)
        rows = counts.sum(axis=1, keepdims=True)
        return np.divide(counts, rows, out=np.zeros_like(counts), where=rows > 0)

    @property
    def fold_mean_accuracy(self) -> Optional[float]:
        if not self.folds:
            return None
        return float(np.mean([f["accuracy"] for f in self.folds]))

    @property
    def fold_mean_macro_f1(self) -> Optional[float]:
        if not self.folds:
            return None
        return float(np.mean([f["macro_f1"] for f in self.folds]))

    @property
    def fold_std_accuracy(self) -> Optional[float]:
        if not self.folds:
            return None
        return float(np.std([f["accuracy"] for f in self.folds]))

    def summary(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "fold_mean_accuracy": self.fold_mean_accuracy,
            "fold_std_accuracy": self.fold_std_accuracy,
            "fold_mean_macro_f1": self.fold_mean_macro_f1,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.summary(),
            "class_names": list(self.class_names),
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "confusion_counts": self.confusion_counts.astype(int).tolist(),
            "confusion": self.confusion.tolist(),
            "folds": self.folds,
        }


def compute_metrics(
    predictions: Sequence[int],
    labels: Sequence[int],
    class_names: Sequence[str],
) -> EvalReport:
    """
    accuracy = correct / total; macro F = mean F1 over classes present in `labels`.
    Classes are indices into `class_names`.
    """
    y_pred = np.asarray(predictions, dtype=np.int64)
    y_true = np.asarray(labels, dtype=np.int64)
    if y_pred.shape != y_true.shape:
        raise ValueError(f"predictions ({len(y_pred)}) and labels ({len(y_true)}) differ in length")
    if y_true.size == 0:
        raise ValueError("compute_metrics needs at least one prediction")
    k = len(class_names)
    if y_true.max() >= k or y_pred.max() >= k or min(y_true.min(), y_pred.min()) < 0:
        raise ValueError(f"class index outside 0..{k - 1}")

    all_classes = np.arange(k)
    cm = confusion_matrix(y_true, y_pred, labels=all_classes)
    present = np.unique(y_true)
    p, r, f, s = precision_recall_fscore_support(
        y_true, y_pred, labels=present, average=None, zero_division=0
    )

    return EvalReport(
        class_names=list(class_names),
        n=int(y_true.size),
        accuracy=float(np.mean(y_pred == y_true)),
        macro_f1=float(np.mean(f)),
        confusion_counts=cm,
        precision={class_names[c]: float(v) for c, v in zip(present, p)},
        recall={class_names[c]: float(v) for c, v in zip(present, r)},
        f1={class_names[c]: float(v) for c, v in zip(present, f)},
        support={class_names[c]: int(v) for c, v in zip(present, s)},
    )
