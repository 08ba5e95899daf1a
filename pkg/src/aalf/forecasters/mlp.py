"""Global black-box forecaster: a two-hidden-layer ReLU network in plain numpy.

The network maps a window of ``L`` lagged values to a single forecast and is
trained on mean squared error with mini-batch gradient descent (Adam or SGD).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, DivergenceDetected, EmptyData
from ..ingest import WindowedSet


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0
    optimizer: str = "adam"
    l2: float = 0.0
    hidden_sizes: tuple[int, int] = (64, 64)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class MLPModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def lag(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_sizes(self) -> tuple[int, int]:
        return self.weights[0].shape[1], self.weights[1].shape[1]

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MLPModel":
        return MLPModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "kind": "mlp",
            "version": 1,
            "lag": self.lag,
            "hidden_sizes": list(self.hidden_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPModel":
        model = cls(
            [np.array(w, dtype=np.float64) for w in d["weights"]],
            [np.array(b, dtype=np.float64) for b in d["biases"]],
        )
        if model.lag != d["lag"] or list(model.hidden_sizes) != list(d["hidden_sizes"]):
            raise DimensionMismatch("stored shape metadata does not match weights")
        return model


def init_mlp(lag: int, hidden_sizes=(64, 64), rng: np.random.Generator | None = None) -> MLPModel:
    """He-initialized weights, zero biases."""
    rng = np.random.default_rng(0) if rng is None else rng
    sizes = [lag, *hidden_sizes, 1]
    weights = [
        rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    ]
    biases = [np.zeros(n) for n in sizes[1:]]
    return MLPModel(weights, biases)


def zero_mlp(lag: int, hidden_sizes=(64, 64)) -> MLPModel:
    sizes = [lag, *hidden_sizes, 1]
    return MLPModel(
        [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        [np.zeros(n) for n in sizes[1:]],
    )


def _forward(model: MLPModel, X: np.ndarray):
    W1, W2, W3 = model.weights
    b1, b2, b3 = model.biases
    z1 = X @ W1 + b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ W2 + b2
    a2 = np.maximum(z2, 0.0)
    out = (a2 @ W3 + b3)[:, 0]
    return out, (z1, a1, z2, a2)


def predict_mlp(model: MLPModel, window) -> float | np.ndarray:
    x = np.asarray(window, dtype=np.float64)
    if x.shape[-1] != model.lag:
        raise DimensionMismatch(f"window has {x.shape[-1]} values, model expects {model.lag}")
    out, _ = _forward(model, np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


def mlp_loss(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    out, _ = _forward(model, np.asarray(X, dtype=np.float64))
    return float(np.mean((out - y) ** 2))


def mlp_gradient(model: MLPModel, X: np.ndarray, y: np.ndarray) -> MLPModel:
    """Gradient of the batch mean squared error, returned in the model's own layout."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyData("empty batch")
    n = X.shape[0]
    W1, W2, W3 = model.weights
    out, (z1, a1, z2, a2) = _forward(model, X)

    d_out = (2.0 / n) * (out - y)[:, None]
    dW3 = a2.T @ d_out
    db3 = d_out.sum(axis=0)
    d2 = (d_out @ W3.T) * (z2 > 0)
    dW2 = a1.T @ d2
    db2 = d2.sum(axis=0)
    d1 = (d2 @ W2.T) * (z1 > 0)
    dW1 = X.T @ d1
    db1 = d1.sum(axis=0)
    return MLPModel([dW1, dW2, dW3], [db1, db2, db3])


@dataclass
class _Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def fit_mlp(
    windows: WindowedSet,
    cfg: TrainConfig = TrainConfig(),
    divergence_factor: float = 1e12,
) -> MLPModel:
    """Train on pooled windows; identical ``cfg`` gives bit-identical weights.

    Raises :class:`DivergenceDetected` if the loss turns non-finite or grows
    past ``divergence_factor`` times its starting value.
    """
    X = np.asarray(windows.inputs, dtype=np.float64)
    y = np.asarray(windows.targets, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise EmptyData("no training windows")

    rng = np.random.default_rng(cfg.seed)
    model = init_mlp(X.shape[1], cfg.hidden_sizes, rng)
    params = model.params()
    adam = _Adam(cfg.learning_rate) if cfg.optimizer == "adam" else None
    limit = divergence_factor * max(mlp_loss(model, X, y), 1.0)

    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                grad = mlp_gradient(model, X[idx], y[idx])
                grads = grad.params()
                if cfg.l2:
                    grads = [g + cfg.l2 * p for g, p in zip(grads, params)]
                if adam is not None:
                    adam.step(params, grads)
                else:
                    for p, g in zip(params, grads):
                        p -= cfg.learning_rate * g
            loss = mlp_loss(model, X, y)
            if not np.isfinite(loss) or loss > limit:
                raise DivergenceDetected(f"training loss diverged at epoch {epoch + 1}: {loss!r}")
    return model
