"""Meta-features and optimal-selection labels for training a selector.

A feature row is the input window followed by the prediction gap
``f_t - g_t``, the previous step's loss difference, and the window's
mean, min and max (``L + 5`` columns in total).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MissingPredictions
from .forecasters.table import PredictionTable
from .ingest import SEGMENTS
from .oracle import budget, loss_diff, optimal_selection

N_EXTRA = 5


def feature_names(lag: int) -> list[str]:
    return [f"lag_{i}" for i in range(lag)] + ["delta_p", "delta_e", "mean", "min", "max"]


@dataclass(frozen=True)
class FeatureVector:
    window: np.ndarray
    delta_p: float
    delta_e: float
    stats: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.window, [self.delta_p, self.delta_e, *self.stats]])

    def __len__(self) -> int:
        return self.window.size + N_EXTRA


def build_feature(window, f_pred_t, g_pred_t, f_pred_prev, g_pred_prev, y_prev, lag=None) -> FeatureVector:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or window.size == 0 or (lag is not None and window.size != lag):
        raise DimensionMismatch(f"window of shape {window.shape} does not match lag {lag}")
    delta_e = (f_pred_prev - y_prev) ** 2 - (g_pred_prev - y_prev) ** 2
    stats = (float(window.mean()), float(window.min()), float(window.max()))
    return FeatureVector(window.copy(), float(f_pred_t - g_pred_t), float(delta_e), stats)


def feature_matrix(inputs, f_pred, g_pred, truth, prev: tuple[float, float, float] | None = None) -> np.ndarray:
    """Vectorized :func:`build_feature` over a contiguous run of steps.

    ``prev`` holds ``(f, g, y)`` of the step just before the run; without it the
    first row's loss-difference feature is 0.
    """
    X = np.asarray(inputs, dtype=np.float64)
    f = np.asarray(f_pred, dtype=np.float64)
    g = np.asarray(g_pred, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    if X.ndim != 2 or not (X.shape[0] == f.size == g.size == y.size):
        raise DimensionMismatch("inputs and prediction vectors are not aligned")
    ell = loss_diff(f, g, y)
    delta_e = np.empty_like(ell)
    if ell.size:
        delta_e[0] = 0.0 if prev is None else (prev[0] - prev[2]) ** 2 - (prev[1] - prev[2]) ** 2
        delta_e[1:] = ell[:-1]
    return np.column_stack([X, f - g, delta_e, X.mean(axis=1), X.min(axis=1), X.max(axis=1)])


@dataclass
class LabeledSelectionSet:
    features: np.ndarray
    labels: np.ndarray
    p_used: float
    B_used: int

    def __len__(self) -> int:
        return self.labels.size

    def to_csv(self) -> str:
        lag = self.features.shape[1] - N_EXTRA
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(feature_names(lag) + ["label"])
        for row, label in zip(self.features, self.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
        return out.getvalue()


def build_training_set(inputs, f_pred, g_pred, truth, p: float, prev=None) -> LabeledSelectionSet:
    """Features plus labels from the optimal selection at ``B = ceil(p T)``."""
    y = np.asarray(truth, dtype=np.float64)
    B = budget(p, y.size)
    sel = optimal_selection(loss_diff(f_pred, g_pred, y), B)
    X = feature_matrix(inputs, f_pred, g_pred, y, prev)
    return LabeledSelectionSet(X, sel.s.astype(np.int8), float(p), B)


def concat_sets(sets: list[LabeledSelectionSet]) -> LabeledSelectionSet:
    """Pool per-series sets; each keeps the labels computed on its own series."""
    return LabeledSelectionSet(
        np.vstack([s.features for s in sets]),
        np.concatenate([s.labels for s in sets]),
        sets[0].p_used,
        sum(s.B_used for s in sets),
    )


def previous_step(table: PredictionTable, series: str, segment: str, f_tag="f", g_tag="g"):
    """``(f, g, y)`` of the last step of the segment before ``segment``, if known."""
    i = SEGMENTS.index(segment)
    if i == 0 or not table.has(series, SEGMENTS[i - 1]):
        return None
    entry = table.get(series, SEGMENTS[i - 1])
    if f_tag not in entry.preds or g_tag not in entry.preds or len(entry) == 0:
        return None
    return float(entry.preds[f_tag][-1]), float(entry.preds[g_tag][-1]), float(entry.truth[-1])


def segment_inputs(values: np.ndarray, origin: np.ndarray, lag: int) -> np.ndarray:
    return values[origin[:, None] + np.arange(-lag, 0)[None, :]]


def segment_features(table: PredictionTable, values, lag: int, series: str, segment: str,
                     f_tag="f", g_tag="g") -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Feature matrix for one series segment plus its f, g and truth vectors."""
    entry = table.get(series, segment)
    for tag in (f_tag, g_tag):
        if tag not in entry.preds:
            raise MissingPredictions(f"{series}/{segment} has no predictions for {tag!r}")
    X = segment_inputs(np.asarray(values, dtype=np.float64), entry.origin, lag)
    f, g, y = entry.preds[f_tag], entry.preds[g_tag], entry.truth
    prev = previous_step(table, series, segment, f_tag, g_tag)
    return feature_matrix(X, f, g, y, prev), f, g, y


def labeled_segment(table: PredictionTable, values, lag: int, series: str, segment: str, p: float,
                    f_tag="f", g_tag="g") -> LabeledSelectionSet:
    feats, f, g, y = segment_features(table, values, lag, series, segment, f_tag, g_tag)
    B = budget(p, y.size)
    sel = optimal_selection(loss_diff(f, g, y), B)
    return LabeledSelectionSet(feats, sel.s.astype(np.int8), float(p), B)
