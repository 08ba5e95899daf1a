"""Local autoregressive forecaster: a linear map of the last ``L`` values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, SingularSystem
from ..ingest import WindowedSet


@dataclass(frozen=True)
class ARModel:
    phi: np.ndarray
    intercept: float | None = None
    residual_std: float = 0.0

    @property
    def lag(self) -> int:
        return self.phi.size

    def to_dict(self) -> dict:
        return {
            "kind": "ar",
            "version": 1,
            "lag": self.lag,
            "phi": [float(v) for v in self.phi],
            "intercept": None if self.intercept is None else float(self.intercept),
            "residual_std": float(self.residual_std),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ARModel":
        phi = np.array(d["phi"], dtype=np.float64)
        if phi.size != d["lag"]:
            raise DimensionMismatch("stored lag does not match coefficient count")
        return cls(phi, d["intercept"], d["residual_std"])


def fit_ar(windows: WindowedSet, intercept: bool = False, ridge: float = 1e-8) -> ARModel:
    """Least squares with an optional ridge penalty on the lag coefficients.

    The intercept, when requested, is never penalized.
    """
    X = np.asarray(windows.inputs, dtype=np.float64)
    y = np.asarray(windows.targets, dtype=np.float64)
    n, L = X.shape
    if intercept:
        X = np.hstack([X, np.ones((n, 1))])
    penalty = np.full(X.shape[1], float(ridge))
    if intercept:
        penalty[-1] = 0.0
    gram = X.T @ X + np.diag(penalty)
    rhs = X.T @ y
    if ridge == 0.0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise SingularSystem("Gram matrix is singular; use a positive ridge")
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc

    resid = X @ coef - y
    residual_std = float(np.sqrt(np.mean(resid**2))) if n else 0.0
    if intercept:
        return ARModel(coef[:L].copy(), float(coef[-1]), residual_std)
    return ARModel(coef, None, residual_std)


def predict_ar(model: ARModel, window) -> float | np.ndarray:
    """Forecast for one window (1-d) or a batch of windows (2-d)."""
    x = np.asarray(window, dtype=np.float64)
    if x.shape[-1] != model.lag:
        raise DimensionMismatch(f"window has {x.shape[-1]} values, model expects {model.lag}")
    out = x @ model.phi
    if model.intercept is not None:
        out = out + model.intercept
    return float(out) if x.ndim == 1 else out
