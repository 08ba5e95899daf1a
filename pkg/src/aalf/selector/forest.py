"""Random forests and the class-balanced forest ensemble (RFu)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyData, SingleClass
from ..seeding import derive_rng, derive_seed
from .tree import DecisionTree, fit_tree


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 128
    max_depth: int | None = None
    min_leaf: int = 1
    max_features: int | None = None  # None -> ceil(sqrt(d))
    bootstrap: bool = True

    def features_for(self, d: int) -> int:
        return self.max_features if self.max_features is not None else max(1, math.ceil(math.sqrt(d)))


@dataclass
class RandomForest:
    trees: list[DecisionTree]
    feature_subsample: int
    bootstrap: bool
    seed: int

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def select(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "kind": "rf",
            "version": 1,
            "feature_subsample": self.feature_subsample,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], d["feature_subsample"], d["bootstrap"], d["seed"])


def fit_forest(X, y, cfg: ForestConfig = ForestConfig(), seed: int = 0) -> RandomForest:
    """Each tree gets its own bootstrap sample and seed, both derived from ``seed``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise EmptyData("cannot fit a forest on no rows")
    if cfg.n_trees < 1:
        raise ValueError("a forest needs at least one tree")
    k = cfg.features_for(d)
    trees = []
    for i in range(cfg.n_trees):
        if cfg.bootstrap:
            rows = derive_rng(seed, "bootstrap", i).integers(0, n, size=n)
            Xi, yi = X[rows], y[rows]
        else:
            Xi, yi = X, y
        trees.append(fit_tree(Xi, yi, cfg.max_depth, cfg.min_leaf, k, derive_seed(seed, "tree", i)))
    return RandomForest(trees, k, cfg.bootstrap, seed)


def upsample_balance(X, y, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Append minority rows drawn with replacement until both classes are equally frequent.

    Original rows are kept, in order, ahead of the appended ones.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y != 1)
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("upsampling needs both classes present")
    minority, deficit = (pos, neg.size - pos.size) if pos.size < neg.size else (neg, pos.size - neg.size)
    extra = rng.choice(minority, size=deficit, replace=True) if deficit else np.empty(0, dtype=np.int64)
    rows = np.concatenate([np.arange(y.size), extra])
    return X[rows], y[rows]


@dataclass
class BalancedForestEnsemble:
    members: list[RandomForest]
    resample_seeds: list[int]
    threshold: float = 0.5

    def predict_proba(self, X) -> np.ndarray:
        return np.mean([m.predict_proba(X) for m in self.members], axis=0)

    def select(self, X, threshold: float | None = None) -> np.ndarray:
        t = self.threshold if threshold is None else threshold
        return (self.predict_proba(X) >= t).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "kind": "rfu",
            "version": 1,
            "threshold": self.threshold,
            "resample_seeds": self.resample_seeds,
            "members": [m.to_dict() for m in self.members],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BalancedForestEnsemble":
        return cls([RandomForest.from_dict(m) for m in d["members"]], d["resample_seeds"], d["threshold"])


def fit_rfu(
    X,
    y,
    cfg: ForestConfig = ForestConfig(),
    n_members: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
) -> BalancedForestEnsemble:
    """Fit ``n_members`` forests, each on its own class-balanced resample."""
    y = np.asarray(y)
    if np.unique(y).size < 2:
        raise SingleClass("the balanced ensemble needs both classes in the training labels")
    members, seeds = [], []
    for m in range(n_members):
        rs = derive_seed(seed, "resample", m)
        Xb, yb = upsample_balance(X, y, np.random.default_rng(rs))
        members.append(fit_forest(Xb, yb, cfg, derive_seed(seed, "member", m)))
        seeds.append(rs)
    return BalancedForestEnsemble(members, seeds, threshold)
