"""Classifiers that predict, step by step, whether to use the interpretable model."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..oracle import SelectionVector
from .forest import (
    BalancedForestEnsemble,
    ForestConfig,
    RandomForest,
    fit_forest,
    fit_rfu,
    upsample_balance,
)
from .logistic import LogisticModel, fit_logistic, logistic_objective
from .tree import DecisionTree, fit_tree, gini_cost

CLASSIFIERS = ("rnd", "lr", "rf", "rfu")


def random_selector(T: int, p: float, seed: int) -> SelectionVector:
    """``T`` independent Bernoulli(p) draws."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    s = (np.random.default_rng(seed).random(T) < p).astype(np.int8)
    return SelectionVector(s, 0)


@dataclass
class RandomSelectorModel:
    """The RND baseline behind the common selector interface."""

    p: float
    seed: int

    def predict_proba(self, X) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], self.p)

    def select(self, X, threshold: float = 0.5) -> np.ndarray:
        return random_selector(np.atleast_2d(X).shape[0], self.p, self.seed).s

    def to_dict(self) -> dict:
        return {"kind": "rnd", "version": 1, "p": self.p, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomSelectorModel":
        return cls(d["p"], d["seed"])


@dataclass
class ConstantSelector:
    """Stands in for a classifier whose training labels contained a single class."""

    label: int

    def predict_proba(self, X) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], float(self.label))

    def select(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int8)

    def to_dict(self) -> dict:
        return {"kind": "const", "version": 1, "label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantSelector":
        return cls(d["label"])


_KINDS = {
    "const": ConstantSelector,
    "rnd": RandomSelectorModel,
    "lr": LogisticModel,
    "rf": RandomForest,
    "rfu": BalancedForestEnsemble,
}


def predict_proba(model, X) -> np.ndarray:
    return model.predict_proba(X)


def select(model, X, threshold: float = 0.5) -> np.ndarray:
    """1 (use f) wherever the predicted probability reaches ``threshold``."""
    return model.select(X, threshold)


def dumps(model) -> str:
    return json.dumps(model.to_dict())


def loads(text: str):
    d = json.loads(text)
    if d.get("version") != 1 or d.get("kind") not in _KINDS:
        raise ValueError(f"unsupported selector payload: kind={d.get('kind')!r} version={d.get('version')!r}")
    return _KINDS[d["kind"]].from_dict(d)


__all__ = [
    "BalancedForestEnsemble",
    "CLASSIFIERS",
    "ConstantSelector",
    "DecisionTree",
    "ForestConfig",
    "LogisticModel",
    "RandomForest",
    "RandomSelectorModel",
    "dumps",
    "fit_forest",
    "fit_logistic",
    "fit_rfu",
    "fit_tree",
    "gini_cost",
    "loads",
    "logistic_objective",
    "predict_proba",
    "random_selector",
    "select",
    "upsample_balance",
]
