"""Rank statistics behind critical-difference comparisons of several methods."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

from .errors import AllZeroDifferences, DegenerateInput, Empty, LengthMismatch

EXACT_MAX_N = 25


@dataclass
class RankMatrix:
    ranks: np.ndarray
    avg_rank: np.ndarray

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def k(self) -> int:
        return self.ranks.shape[1]


def average_ranks(losses) -> RankMatrix:
    """Per-row ranks (1 = lowest loss, ties share their mean rank) and column means."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.ndim != 2 or losses.shape[0] < 1 or losses.shape[1] < 2:
        raise Empty("need at least one row and two methods")
    ranks = _st.rankdata(losses, method="average", axis=1)
    return RankMatrix(ranks, ranks.mean(axis=0))


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float


def friedman_test(ranks: RankMatrix) -> FriedmanResult:
    n, k = ranks.n, ranks.k
    if n < 2 or k < 2:
        raise DegenerateInput(f"Friedman test needs n >= 2 and k >= 2 (got n={n}, k={k})")
    centered = ranks.avg_rank - (k + 1) / 2.0
    stat = 12.0 * n / (k * (k + 1)) * float(centered @ centered)
    return FriedmanResult(stat, float(_st.chi2.sf(stat, k - 1)))


@dataclass(frozen=True)
class PairwiseResult:
    statistic: float
    p_value: float
    method: str
    n: int


def _signed_ranks(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch("paired samples differ in length")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise AllZeroDifferences("all paired differences are zero")
    return d, _st.rankdata(np.abs(d))


def exact_null_distribution(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of the positive-rank sum under random signs.

    Ranks are multiples of 1/2 (midranks), so the distribution is built over
    doubled ranks with an integer-indexed convolution.
    """
    doubled = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    support = np.arange(counts.size) / 2.0
    return support, counts / counts.sum()


def wilcoxon_signed_rank(a, b, sided: str = "two-sided") -> PairwiseResult:
    """Signed-rank test on ``a - b``; statistic is the sum of positive ranks.

    ``sided="greater"`` tests whether ``a`` tends to exceed ``b``. Zero
    differences are dropped. With at most 25 non-zero differences the p-value
    is exact, otherwise a tie-corrected normal approximation with continuity
    correction is used.
    """
    if sided not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {sided!r}")
    d, r = _signed_ranks(a, b)
    n = d.size
    w = float(r[d > 0].sum())

    if n <= EXACT_MAX_N:
        support, prob = exact_null_distribution(r)
        upper = float(prob[support >= w - 1e-9].sum())
        lower = float(prob[support <= w + 1e-9].sum())
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(r, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        sd = math.sqrt(var)
        upper = float(_st.norm.sf((w - mean - 0.5) / sd))
        lower = float(_st.norm.cdf((w - mean + 0.5) / sd))
        method = "normal_approx"

    if sided == "greater":
        p = upper
    elif sided == "less":
        p = lower
    else:
        p = min(1.0, 2.0 * min(upper, lower))
    return PairwiseResult(w, p, method, n)


def _holm(pvals: dict) -> dict:
    items = sorted(pvals.items(), key=lambda kv: kv[1])
    m = len(items)
    out, running = {}, 0.0
    for i, (key, p) in enumerate(items):
        running = max(running, min(1.0, (m - i) * p))
        out[key] = running
    return out


@dataclass
class CDResult:
    methods: list[str]
    avg_rank: np.ndarray
    friedman: FriedmanResult
    pairwise: dict[tuple[str, str], float]
    groups: list[list[str]]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "avg_rank", "group_ids"])
        for name, rank in sorted(zip(self.methods, self.avg_rank), key=lambda t: (t[1], t[0])):
            ids = [str(i) for i, g in enumerate(self.groups) if name in g]
            w.writerow([name, repr(float(rank)), ";".join(ids)])
        return out.getvalue()


def cd_groups(losses, methods=None, alpha: float = 0.05, correction: str | None = None) -> CDResult:
    """Groups of methods whose performance cannot be told apart.

    If the Friedman test does not reject at ``alpha`` all methods form one
    group. Otherwise methods are ordered by average rank, and every maximal
    run of rank-adjacent methods in which no pair differs significantly under
    a two-sided Wilcoxon test becomes a group. Singletons are not reported.
    """
    losses = np.asarray(losses, dtype=np.float64)
    k = losses.shape[1]
    methods = [str(m) for m in (methods if methods is not None else range(k))]
    rm = average_ranks(losses)
    fr = friedman_test(rm)
    pairwise: dict[tuple[str, str], float] = {}
    if not fr.p_value < alpha:
        return CDResult(methods, rm.avg_rank, fr, pairwise, [sorted(methods, key=methods.index)])

    for i in range(k):
        for j in range(i + 1, k):
            try:
                p = wilcoxon_signed_rank(losses[:, i], losses[:, j]).p_value
            except AllZeroDifferences:
                p = 1.0
            pairwise[(methods[i], methods[j])] = p
    if correction == "holm":
        pairwise = _holm(pairwise)
    elif correction is not None:
        raise ValueError(f"unknown correction {correction!r}")

    def same(x: str, y: str) -> bool:
        key = (x, y) if (x, y) in pairwise else (y, x)
        return pairwise[key] >= alpha

    order = sorted(range(k), key=lambda j: (rm.avg_rank[j], methods[j]))
    names = [methods[j] for j in order]
    groups: list[list[str]] = []
    for start in range(k):
        end = start
        while end + 1 < k and all(same(names[end + 1], names[m]) for m in range(start, end + 1)):
            end += 1
        run = names[start : end + 1]
        if len(run) > 1 and not any(set(run) <= set(g) for g in groups):
            groups.append(run)
    return CDResult(methods, rm.avg_rank, fr, pairwise, groups)
