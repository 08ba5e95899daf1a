"""Optimal constrained selection between an interpretable model f and a black box g.

Choosing f at step ``t`` changes the total squared error by
``ell(t) = (f_t - y_t)^2 - (g_t - y_t)^2`` relative to always choosing g. Minimizing
the total error subject to picking f at least ``B`` times therefore reduces to
picking every step whose ``ell`` does not exceed ``max(0, ell_(B))``, where
``ell_(B)`` is the B-th smallest loss difference.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import BOutOfRange, EmptySegment, LengthMismatch
from .metrics import rmse

DEFAULT_FLOOR_POINTS = 100


def _aligned(*arrays) -> list[np.ndarray]:
    out = [np.asarray(a, dtype=np.float64) for a in arrays]
    if len({a.shape for a in out}) != 1 or out[0].ndim != 1:
        raise LengthMismatch(f"vectors must be 1-d and equally long, got {[a.shape for a in out]}")
    return out


def loss_diff(f_pred, g_pred, truth) -> np.ndarray:
    f, g, y = _aligned(f_pred, g_pred, truth)
    return (f - y) ** 2 - (g - y) ** 2


@dataclass(frozen=True)
class SelectionVector:
    s: np.ndarray
    B: int

    @property
    def achieved_count(self) -> int:
        return int(self.s.sum())

    @property
    def T(self) -> int:
        return self.s.size

    def __post_init__(self):
        if self.s.sum() < self.B:
            raise BOutOfRange(f"selection of size {int(self.s.sum())} violates |s| >= {self.B}")


def selection_threshold(ell: np.ndarray, B: int) -> float:
    """Largest loss difference that still gets f selected."""
    ell = np.asarray(ell, dtype=np.float64)
    if not 0 <= B <= ell.size:
        raise BOutOfRange(f"B={B} outside [0, {ell.size}]")
    if B == 0 or np.count_nonzero(ell <= 0.0) >= B:
        return 0.0
    return float(np.sort(ell, kind="stable")[B - 1])


def optimal_selection(ell, B: int) -> SelectionVector:
    ell = np.asarray(ell, dtype=np.float64)
    threshold = selection_threshold(ell, B)
    return SelectionVector((ell <= threshold).astype(np.int8), int(B))


def mixed_prediction(f_pred, g_pred, s) -> np.ndarray:
    f, g = _aligned(f_pred, g_pred)
    s = np.asarray(s.s if isinstance(s, SelectionVector) else s)
    if s.shape != f.shape:
        raise LengthMismatch("selection length differs from prediction length")
    return np.where(s.astype(bool), f, g)


def selection_loss(f_pred, g_pred, truth, s) -> float:
    """Total squared error when f is used where ``s`` is 1 and g elsewhere."""
    f, g, y = _aligned(f_pred, g_pred, truth)
    s = np.asarray(s.s if isinstance(s, SelectionVector) else s, dtype=np.float64)
    if s.shape != y.shape:
        raise LengthMismatch("selection length differs from prediction length")
    return float(np.sum((y - s * f - (1.0 - s) * g) ** 2))


def budget(p: float, T: int) -> int:
    """Minimum number of f selections for a relative constraint ``p``."""
    # guard against p*T landing a hair above an integer through rounding
    return min(T, math.ceil(round(p * T, 9)))


@dataclass(frozen=True)
class FloorPoint:
    p: float
    achieved_p: float
    rmse: float


@dataclass
class FloorCurve:
    points: list[FloorPoint]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["p", "achieved_p", "rmse"])
        for pt in self.points:
            w.writerow([repr(pt.p), repr(pt.achieved_p), repr(pt.rmse)])
        return out.getvalue()

    @property
    def p(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def rmse(self) -> np.ndarray:
        return np.array([pt.rmse for pt in self.points])

    @property
    def achieved_p(self) -> np.ndarray:
        return np.array([pt.achieved_p for pt in self.points])


def default_p_grid(n: int = DEFAULT_FLOOR_POINTS) -> np.ndarray:
    """``n`` evenly spaced constraint levels ``1/n, 2/n, ..., 1``."""
    return np.arange(1, n + 1) / n


def floor_sweep(f_pred, g_pred, truth, p_values=None) -> FloorCurve:
    """Oracle RMSE of the mixed forecast for each relative constraint ``p``."""
    f, g, y = _aligned(f_pred, g_pred, truth)
    T = y.size
    if T == 0:
        raise EmptySegment("cannot sweep an empty segment")
    p_values = default_p_grid() if p_values is None else np.asarray(p_values, dtype=np.float64)
    if np.any((p_values <= 0) | (p_values > 1)):
        raise ValueError("p values must lie in (0, 1]")

    ell = (f - y) ** 2 - (g - y) ** 2
    points = []
    for p in p_values:
        sel = optimal_selection(ell, budget(float(p), T))
        mixed = mixed_prediction(f, g, sel)
        points.append(FloorPoint(float(p), sel.achieved_count / T, rmse(mixed, y)))
    return FloorCurve(points)
