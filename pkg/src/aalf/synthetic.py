"""Synthetic datasets with known structure, used by tests and the demo run."""

from __future__ import annotations

import csv
import io

import numpy as np

from .ingest import Dataset, TimeSeries, make_windows, split_series

START = "2000-01-01 00-00-00"


def ar_series(n: int, phi, sigma: float, rng: np.random.Generator, burn: int = 200) -> np.ndarray:
    """Stationary AR(p) path; ``phi[0]`` multiplies the most recent value."""
    phi = np.asarray(phi, dtype=np.float64)
    x = np.zeros(n + burn)
    for t in range(phi.size, x.size):
        x[t] = phi @ x[t - phi.size : t][::-1] + sigma * rng.normal()
    return x[burn:]


def exponential_ar_series(n: int, rng: np.random.Generator, sigma: float = 0.3, burn: int = 200) -> np.ndarray:
    """Amplitude-dependent AR(1): strongly persistent near zero, damped far from it.

    A linear model has to settle on one average coefficient, so a small
    nonlinear regressor beats it on this process.
    """
    x = np.zeros(n + burn)
    for t in range(1, x.size):
        prev = x[t - 1]
        x[t] = (0.3 + 1.3 * np.exp(-prev * prev)) * prev + sigma * rng.normal()
    return x[burn:]


def seasonal_series(n: int, period: int, rng: np.random.Generator) -> np.ndarray:
    """Positive level with a fixed seasonal profile, AR(1) deviations and noise."""
    profile = rng.uniform(0.5, 1.5, size=period)
    level = rng.uniform(10.0, 30.0)
    wiggle = ar_series(n, [0.7], 1.0, rng)
    return level * profile[np.arange(n) % period] + wiggle + rng.normal(scale=0.5, size=n)


def ar_dataset(n_series: int, length: int, seed: int = 0, frequency: str = "daily", name: str = "synthetic_ar") -> Dataset:
    rng = np.random.default_rng(seed)
    series = []
    for i in range(n_series):
        phi = [rng.uniform(0.4, 0.8), rng.uniform(-0.3, 0.1)]
        series.append(TimeSeries(f"T{i + 1}", ar_series(length, phi, 1.0, rng), frequency, START))
    return Dataset(name, series)


def nonlinear_dataset(n_series: int, length: int, seed: int = 0, frequency: str = "daily", name: str = "synthetic_nonlinear") -> Dataset:
    rng = np.random.default_rng(seed)
    series = [TimeSeries(f"T{i + 1}", exponential_ar_series(length, rng), frequency, START) for i in range(n_series)]
    return Dataset(name, series)


def seasonal_dataset(n_series: int, length: int, seed: int = 0, period: int = 7, name: str = "synthetic_seasonal") -> Dataset:
    """Daily series shaped like the cash-withdrawal benchmark (equal length, weekly cycle)."""
    rng = np.random.default_rng(seed)
    series = [TimeSeries(f"T{i + 1}", seasonal_series(length, period, rng), "daily", START) for i in range(n_series)]
    return Dataset(name, series)


def perfect_predictions_csv(dataset: Dataset, lag: int, segments=("train", "val", "test")) -> str:
    """Prediction file in which every forecast equals the observed value.

    Paired with an AR model as ``f``, the selection label of a step depends
    only on ``|f - g|``, which makes the selector task learnable by design.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["series", "segment", "origin_index", "value"])
    for s in dataset.series:
        split = split_series(s)
        for segment in segments:
            w = make_windows(s.values, lag, segment, split)
            for origin, value in zip(w.origin_indices, w.targets):
                writer.writerow([s.name, segment, int(origin), repr(float(value))])
    return out.getvalue()


def selection_suite(n_series: int = 8, length: int = 2000, seed: int = 0) -> Dataset:
    """AR(2) series on which a perfect black box is paired with a fitted AR model."""
    return ar_dataset(n_series, length, seed=seed, name="selection_suite")
