"""Brute-force reference computations, deliberately independent of the package code."""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_selection_loss(f, g, y, B):
    """Minimum of sum_t (y - s f - (1-s) g)^2 over every s in {0,1}^T with |s| >= B."""
    T = len(y)
    best = math.inf
    best_s = None
    for bits in itertools.product((0, 1), repeat=T):
        if sum(bits) < B:
            continue
        loss = 0.0
        for t in range(T):
            pred = f[t] if bits[t] else g[t]
            loss += (y[t] - pred) ** 2
        if loss < best:
            best, best_s = loss, bits
    return best, best_s


def brute_force_reduced(ell, B):
    """Minimum of sum_t s_t ell_t over feasible s (the reduced objective)."""
    best = math.inf
    for bits in itertools.product((0, 1), repeat=len(ell)):
        if sum(bits) >= B:
            best = min(best, sum(b * e for b, e in zip(bits, ell)))
    return best


def gaussian_elimination(A, b):
    """Solve A x = b by Gaussian elimination with partial pivoting (pure Python)."""
    n = len(b)
    M = [list(map(float, A[i])) + [float(b[i])] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            factor = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= factor * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = acc / M[r][r]
    return np.array(x)


def normal_equations_oracle(X, y, ridge=0.0):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    A = X.T @ X + ridge * np.eye(X.shape[1])
    return gaussian_elimination(A.tolist(), (X.T @ y).tolist())


def central_differences(loss_fn, params, step=1e-5):
    """Central finite-difference gradient of ``loss_fn()`` w.r.t. each array in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = p[i]
            p[i] = orig + step
            up = loss_fn()
            p[i] = orig - step
            down = loss_fn()
            p[i] = orig
            g[i] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def wilcoxon_enumeration(diffs, sided="two-sided"):
    """Exact signed-rank p-value by listing all 2^n sign assignments."""
    d = [x for x in diffs if x != 0]
    n = len(d)
    absd = [abs(x) for x in d]
    # midranks by direct counting
    ranks = []
    for v in absd:
        less = sum(1 for u in absd if u < v)
        equal = sum(1 for u in absd if u == v)
        ranks.append(less + (equal + 1) / 2)
    w_obs = sum(r for r, x in zip(ranks, d) if x > 0)
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        ge += w >= w_obs - 1e-9
        le += w <= w_obs + 1e-9
    total = 2**n
    if sided == "greater":
        return w_obs, ge / total
    if sided == "less":
        return w_obs, le / total
    return w_obs, min(1.0, 2 * min(ge, le) / total)


def enumerate_selection_losses(f, g, y):
    """Every s in {0,1}^T as rows of a matrix, with the squared loss of each mix."""
    T = len(y)
    masks = np.array(list(itertools.product((0, 1), repeat=T)), dtype=np.int64).reshape(-1, T)
    f, g, y = (np.asarray(v, dtype=np.float64) for v in (f, g, y))
    preds = np.where(masks == 1, f, g)
    return masks, ((y - preds) ** 2).sum(axis=1)
