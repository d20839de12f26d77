"""Confusion-matrix metrics with OOD as the positive class, threshold sweeps,
and a rank-based AUC."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError

METRIC_ORDER = ("f1", "recall", "precision", "specificity", "accuracy")


def f1_from_precision_recall(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    f1: float
    recall: float
    precision: float
    specificity: float
    accuracy: float
    degenerate: list[str] = field(default_factory=list)  # metrics with a 0 denominator

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "EvalReport":
        n = tp + fp + tn + fn
        if n == 0:
            raise ConfigError("empty confusion matrix")
        degenerate = []

        def ratio(num, den, name):
            if den == 0:
                degenerate.append(name)
                return 0.0
            return num / den

        recall = ratio(tp, tp + fn, "recall")
        precision = ratio(tp, tp + fp, "precision")
        specificity = ratio(tn, tn + fp, "specificity")
        accuracy = (tp + tn) / n
        if precision + recall == 0:
            degenerate.append("f1")
        f1 = f1_from_precision_recall(precision, recall)
        return cls(tp, fp, tn, fn, f1, recall, precision, specificity, accuracy, degenerate)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "f1": self.f1,
            "recall": self.recall,
            "precision": self.precision,
            "specificity": self.specificity,
            "accuracy": self.accuracy,
            "degenerate": list(self.degenerate),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_labels(values, what):
    out = list(values)
    for v in out:
        if v not in ("ID", "OOD"):
            raise ConfigError(f"{what}: labels must be 'ID' or 'OOD', got {v!r}")
    return out


def confusion_metrics(labels, predictions) -> EvalReport:
    """Five metrics from label/prediction pairs; OOD is the positive class."""
    labels = _check_labels(labels, "labels")
    predictions = _check_labels(predictions, "predictions")
    if len(labels) != len(predictions):
        raise DimensionError(
            f"confusion_metrics: {len(labels)} labels vs {len(predictions)} predictions"
        )
    if not labels:
        raise ConfigError("confusion_metrics: empty input")
    tp = fp = tn = fn = 0
    for truth, pred in zip(labels, predictions):
        if truth == "OOD":
            if pred == "OOD":
                tp += 1
            else:
                fn += 1
        else:
            if pred == "OOD":
                fp += 1
            else:
                tn += 1
    return EvalReport.from_counts(tp, fp, tn, fn)


def sweep_thresholds(diffs, labels, grid) -> list[tuple[float, EvalReport]]:
    """One report per grid threshold, predicting OOD iff diff > threshold."""
    diffs = np.asarray(diffs, dtype=np.float64)
    labels = _check_labels(labels, "labels")
    if diffs.shape[0] != len(labels):
        raise DimensionError("sweep_thresholds: diffs and labels lengths disagree")
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep_thresholds: empty grid")
    out = []
    for thr in grid:
        preds = ["OOD" if d > thr else "ID" for d in diffs]
        out.append((float(thr), confusion_metrics(labels, preds)))
    return out


def auc_score(diffs, labels) -> float:
    """Probability that a random OOD sample outscores a random ID sample.

    Rank-based (ties get half credit); needs at least one sample per class.
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    labels = _check_labels(labels, "labels")
    pos = np.array([l == "OOD" for l in labels])
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ConfigError("auc_score: need both ID and OOD samples")
    order = np.argsort(diffs, kind="stable")
    ranks = np.empty(len(diffs), dtype=np.float64)
    sorted_d = diffs[order]
    i = 0
    while i < len(diffs):
        j = i
        while j + 1 < len(diffs) and sorted_d[j + 1] == sorted_d[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def format_report_table(rows: list[tuple[str, EvalReport]]) -> str:
    """Aligned plain-text table, one report per row."""
    headers = ["", "F1", "Recall", "Precision", "Specificity", "Accuracy"]
    body = [
        [name] + [f"{getattr(rep, m):.4f}" for m in METRIC_ORDER] for name, rep in rows
    ]
    widths = [max(len(r[c]) for r in [headers] + body) for c in range(len(headers))]
    lines = []
    for row in [headers] + body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
