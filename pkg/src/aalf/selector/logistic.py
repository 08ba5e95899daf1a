"""L2-regularized logistic regression fitted by monotone gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch, EmptyData


@dataclass
class LogisticModel:
    """Decision function ``sigmoid(weights @ x + bias)`` on raw features.

    ``center``/``scale`` record the feature standardization the penalty was
    applied in; ``loss_history`` is the objective after every accepted step.
    """

    weights: np.ndarray
    bias: float
    center: np.ndarray
    scale: np.ndarray
    l2: float
    loss_history: list[float] = field(default_factory=list, repr=False)

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.size:
            raise DimensionMismatch(f"expected {self.weights.size} features, got {X.shape[1]}")
        return expit(X @ self.weights + self.bias)

    def select(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int8)

    def standardized_params(self) -> tuple[np.ndarray, float]:
        w = self.weights * self.scale
        return w, float(self.bias + self.weights @ self.center)

    def to_dict(self) -> dict:
        return {
            "kind": "lr",
            "version": 1,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "l2": self.l2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(
            np.array(d["weights"]), d["bias"], np.array(d["center"]), np.array(d["scale"]), d["l2"]
        )


def logistic_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss plus ``l2/2 * |w|^2`` and its gradient ``(dw, db)``."""
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = (expit(z) - y) / y.size
    return loss, X.T @ r + l2 * w, float(r.sum())


def fit_logistic(
    X,
    y,
    l2: float = 1e-2,
    max_iter: int = 20000,
    tol: float = 1e-6,
) -> LogisticModel:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Features are standardized internally; the bias is not penalized. Stops
    once the gradient norm drops below ``tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("cannot fit logistic regression on no rows")
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    Xs = (X - center) / scale

    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = logistic_objective(w, b, Xs, y, l2)
    history = [loss]
    step = 1.0
    for _ in range(max_iter):
        gnorm2 = gw @ gw + gb * gb
        if np.sqrt(gnorm2) < tol:
            break
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss, gw_new, gb_new = logistic_objective(w_new, b_new, Xs, y, l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if new_loss > loss:
            break
        sw, sb = w_new - w, b_new - b
        dw, db = gw_new - gw, gb_new - gb
        sy = sw @ dw + sb * db
        w, b, loss, gw, gb = w_new, b_new, new_loss, gw_new, gb_new
        history.append(loss)
        step = (sw @ sw + sb * sb) / sy if sy > 0 else 1.0

    weights = w / scale
    bias = float(b - weights @ center)
    return LogisticModel(weights, bias, center, scale, l2, history)
