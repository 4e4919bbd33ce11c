"""Classification metrics and quantization error."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..graph import row_distances


@dataclass
class ClassificationReport:
    labels: list
    confusion: np.ndarray  # rows: truth, columns: prediction
    accuracy: float
    precision: dict
    recall: dict
    f_score: dict
    macro_precision: float
    macro_recall: float
    macro_f: float
    extra: dict = field(default_factory=dict)


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def report_from_confusion(labels, confusion) -> ClassificationReport:
    """Every metric derived from a confusion matrix alone (macro averages)."""
    cm = np.asarray(confusion, dtype=np.int64)
    labels = list(labels)
    if cm.shape != (len(labels), len(labels)):
        raise ValueError("confusion matrix does not match the label list")
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    precision, recall, f = {}, {}, {}
    for i, lab in enumerate(labels):
        tp = cm[i, i]
        p = _div(tp, cm[:, i].sum())
        r = _div(tp, cm[i, :].sum())
        precision[lab], recall[lab], f[lab] = p, r, _div(2 * p * r, p + r)
    present = [lab for i, lab in enumerate(labels) if cm[i, :].sum() > 0]
    return ClassificationReport(
        labels, cm, float(np.trace(cm)) / total, precision, recall, f,
        float(np.mean([precision[l] for l in present])),
        float(np.mean([recall[l] for l in present])),
        float(np.mean([f[l] for l in present])),
    )


def classification_metrics(pred, truth, labels=None) -> ClassificationReport:
    pred, truth = list(pred), list(truth)
    if not truth:
        raise ValueError("no predictions to score")
    if len(pred) != len(truth):
        raise ValueError("predictions and truth differ in length")
    labels = sorted(set(truth) | set(pred)) if labels is None else list(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, t in zip(pred, truth):
        cm[index[t], index[p]] += 1
    return report_from_confusion(labels, cm)


def quantization_error(net, data) -> float:
    """Mean distance between samples and their BMU weights (plain weight distance)."""
    X = np.asarray(data, dtype=np.float64)
    if X.size == 0:
        raise ValueError("quantization error of an empty dataset")
    X = X.reshape(-1, net.dim)
    return float(np.mean([np.min(row_distances(net.weights, x)) for x in X]))
