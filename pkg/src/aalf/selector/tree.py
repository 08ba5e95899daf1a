"""Binary CART classification trees grown on Gini impurity.

Trees are stored as flat node arrays; the growing and traversal loops are
compiled with numba so that forests of a few thousand trees stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import DimensionMismatch, EmptyData

LEAF = -1


@numba.njit(cache=True, nogil=True)
def _best_split(X, y, idx, start, end, features, min_leaf):
    """Scan every sorted threshold of the given features for the lowest weighted Gini."""
    n = end - start
    best_feature = -1
    best_value = 0.0
    best_cost = np.inf
    vals = np.empty(n)
    labs = np.empty(n)
    for f in features:
        for i in range(n):
            vals[i] = X[idx[start + i], f]
            labs[i] = y[idx[start + i]]
        order = np.argsort(vals, kind="mergesort")
        pos_total = labs.sum()
        pos_left = 0.0
        for i in range(n - 1):
            pos_left += labs[order[i]]
            lo = vals[order[i]]
            hi = vals[order[i + 1]]
            if hi <= lo:
                continue
            n_left = i + 1
            n_right = n - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            pos_right = pos_total - pos_left
            # n_k * gini_k = 2 pos_k (n_k - pos_k) / n_k
            cost = (
                2.0 * pos_left * (n_left - pos_left) / n_left
                + 2.0 * pos_right * (n_right - pos_right) / n_right
            ) / n
            if cost < best_cost:
                best_cost = cost
                best_feature = f
                threshold = 0.5 * (lo + hi)
                if threshold >= hi:
                    threshold = lo
                best_value = threshold
    return best_feature, best_value, best_cost


@numba.njit(cache=True, nogil=True)
def _grow(X, y, max_features, max_depth, min_leaf, seed):
    np.random.seed(seed)
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)
    idx = np.arange(n)
    candidates = np.arange(d)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        count = end - start
        pos = 0.0
        for i in range(start, end):
            pos += y[idx[i]]
        value[node] = pos / count
        if pos == 0.0 or pos == count or count < 2 * min_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        # partial Fisher-Yates draw of the candidate features for this node
        for k in range(max_features):
            j = k + np.random.randint(0, d - k)
            tmp = candidates[k]
            candidates[k] = candidates[j]
            candidates[j] = tmp
        feats = np.sort(candidates[:max_features].copy())
        f, thr, cost = _best_split(X, y, idx, start, end, feats, min_leaf)
        if f < 0:
            continue

        # in-place partition: rows with X[:, f] <= thr go left
        i = start
        j = end - 1
        while i <= j:
            if X[idx[i], f] <= thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i

        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        stack_node[top] = right[node]
        stack_start[top] = mid
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = left[node]
        stack_start[top] = start
        stack_end[top] = mid
        stack_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@dataclass(frozen=True)
class DecisionTree:
    """Flat tree: node ``i`` is a leaf iff ``feature[i] == -1``.

    ``value`` holds each node's fraction of positive training rows; only the
    leaf entries are used for prediction.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    max_depth: int | None = None
    min_leaf: int = 1

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got shape {X.shape}")
        return _apply(self.feature, self.threshold, self.left, self.right, self.value, X)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=np.float64),
            d["n_features"],
            d["max_depth"],
            d["min_leaf"],
        )


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_leaf: int = 1,
    max_features: int | None = None,
    seed: int = 0,
) -> DecisionTree:
    """Greedy Gini tree; ``max_features`` candidate features are drawn at every node."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("cannot fit a tree on no rows")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch("labels do not match rows")
    d = X.shape[1]
    k = d if max_features is None else int(max_features)
    if not 1 <= k <= d:
        raise ValueError(f"max_features must be in [1, {d}]")
    arrays = _grow(X, y, k, -1 if max_depth is None else int(max_depth), int(min_leaf), int(seed))
    return DecisionTree(*arrays, n_features=d, max_depth=max_depth, min_leaf=min_leaf)


def gini_cost(left_labels, right_labels) -> float:
    """Weighted Gini impurity of a two-way split (used for checks and debugging)."""
    left_labels = np.asarray(left_labels, dtype=float)
    right_labels = np.asarray(right_labels, dtype=float)
    n = left_labels.size + right_labels.size
    total = 0.0
    for part in (left_labels, right_labels):
        if part.size:
            q = part.mean()
            total += part.size * 2.0 * q * (1.0 - q)
    return total / n
