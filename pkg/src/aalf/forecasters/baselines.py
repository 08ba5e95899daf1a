"""Window baselines: repeat the last observed value or the window mean."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch


def _check(window, lag: int | None) -> np.ndarray:
    x = np.asarray(window, dtype=np.float64)
    if x.shape[-1] == 0 or (lag is not None and x.shape[-1] != lag):
        raise DimensionMismatch(f"window has {x.shape[-1]} values, expected {lag}")
    return x


def baseline_last(window, lag: int | None = None):
    x = _check(window, lag)
    out = x[..., -1]
    return float(out) if x.ndim == 1 else out.copy()


def baseline_mean(window, lag: int | None = None):
    x = _check(window, lag)
    out = x.mean(axis=-1)
    return float(out) if x.ndim == 1 else out
