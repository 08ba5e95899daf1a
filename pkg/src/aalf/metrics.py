"""Forecast errors, pooled F1 and selection-rate bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import Empty, LengthMismatch


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    if pred.size == 0:
        raise Empty("no values to score")
    return pred, truth


def rmse(pred, truth, mean: bool = True) -> float:
    """Root mean squared error; ``mean=False`` gives the root of the plain sum."""
    pred, truth = _pair(pred, truth)
    sq = (pred - truth) ** 2
    return float(np.sqrt(sq.mean() if mean else sq.sum()))


def smape(pred, truth) -> float:
    """Symmetric MAPE in [0, 2]; a step where both values are 0 contributes 0."""
    pred, truth = _pair(pred, truth)
    num = 2.0 * np.abs(truth - pred)
    den = np.abs(truth) + np.abs(pred)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den != 0)
    return float(terms.mean())


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


def confusion(pred_labels, true_labels) -> ConfusionCounts:
    """Counts with "select f" (label 1) as the positive class."""
    pred = np.asarray(pred_labels).astype(bool)
    true = np.asarray(true_labels).astype(bool)
    if pred.shape != true.shape:
        raise LengthMismatch("label vectors differ in length")
    return ConfusionCounts(
        int(np.sum(pred & true)),
        int(np.sum(pred & ~true)),
        int(np.sum(~pred & true)),
        int(np.sum(~pred & ~true)),
    )


def f1_pooled(counts: Iterable[ConfusionCounts]) -> float:
    """F1 from counts summed over all series, not an average of per-series F1."""
    total = ConfusionCounts()
    for c in counts:
        total = total + c
    return total.f1()


def empirical_p(s) -> float:
    s = np.asarray(getattr(s, "s", s))
    if s.size == 0:
        raise Empty("empty selection")
    return float(np.count_nonzero(s)) / s.size


def dataset_average(values) -> float:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise Empty("no per-series values to average")
    return float(values.mean())
