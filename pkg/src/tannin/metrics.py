"""Confusion matrix and macro-averaged precision / recall / F1 / accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 10
AVERAGING = "macro over classes with nonzero support; 0 for undefined precision/F1"


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted class

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict  # class label -> ClassMetrics, only classes with support > 0
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float

    def to_dict(self) -> dict:
        return {
            "precision": self.macro_precision,
            "accuracy": self.accuracy,
            "recall": self.macro_recall,
            "f1": self.macro_f1,
            "averaging": AVERAGING,
            "per_class": {
                str(c): {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                for c, m in sorted(self.per_class.items())
            },
        }


def confusion(y_true, y_pred, num_classes: int = NUM_CLASSES) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValueError(f"{name} has labels outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


def _ratio(num, den) -> float:
    return float(num / den) if den > 0 else 0.0


def report(cm: ConfusionMatrix) -> MetricsReport:
    counts = cm.counts
    total = counts.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    per_class = {}
    for c in range(counts.shape[0]):
        support = int(counts[c].sum())
        if support == 0:
            continue
        tp = counts[c, c]
        precision = _ratio(tp, counts[:, c].sum())
        recall = _ratio(tp, support)
        f1 = _ratio(2 * precision * recall, precision + recall)
        per_class[c] = ClassMetrics(precision, recall, f1, support)
    k = len(per_class)
    return MetricsReport(
        per_class,
        sum(m.precision for m in per_class.values()) / k,
        sum(m.recall for m in per_class.values()) / k,
        sum(m.f1 for m in per_class.values()) / k,
        float(np.trace(counts) / total),
    )


def evaluate(y_true, y_pred) -> MetricsReport:
    return report(confusion(y_true, y_pred))


COLUMNS = ("Precision", "Accuracy", "Recall", "F1-Score")


def format_table(rows, extra_columns=()) -> str:
    """Aligned text table: one (name, MetricsReport-or-dict) row per model.

    `extra_columns` are (header, key) pairs read from each row's dict form.
    """
    headers = ["Model", *COLUMNS, *(h for h, _ in extra_columns)]
    body = []
    for name, rep in rows:
        d = rep.to_dict() if isinstance(rep, MetricsReport) else rep
        cells = [name] + [f"{d[k]:.3f}" for k in ("precision", "accuracy", "recall", "f1")]
        cells += [d[key] if isinstance(d[key], str) else f"{d[key]:.3f}" for _, key in extra_columns]
        body.append(cells)
    widths = [max(len(str(r[i])) for r in [headers, *body]) for i in range(len(headers))]
    line = lambda cells: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    rule = "-" * len(line(headers))
    return "\n".join([line(headers), rule, *(line(r) for r in body)]) + "\n"
