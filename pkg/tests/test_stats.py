import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aalf.errors import AllZeroDifferences, DegenerateInput, Empty
from aalf.stats import (
    average_ranks,
    cd_groups,
    exact_null_distribution,
    friedman_test,
    wilcoxon_signed_rank,
)

from oracles import wilcoxon_enumeration


def test_average_ranks_examples():
    rm = average_ranks([[0.1, 0.3, 0.2], [0.1, 0.1, 0.5]])
    np.testing.assert_array_equal(rm.ranks, [[1, 3, 2], [1.5, 1.5, 3]])
    np.testing.assert_array_equal(average_ranks(np.ones((4, 3))).avg_rank, [2, 2, 2])
    with pytest.raises(Empty):
        average_ranks(np.ones((3, 1)))


@given(st.integers(1, 10), st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_rank_rows_sum(n, k, seed):
    losses = np.random.default_rng(seed).integers(0, 3, size=(n, k)).astype(float)
    rm = average_ranks(losses)
    np.testing.assert_allclose(rm.ranks.sum(axis=1), k * (k + 1) / 2)


def test_friedman_identical_and_degenerate():
    res = friedman_test(average_ranks(np.ones((6, 4))))
    assert res.statistic == 0.0 and res.p_value == 1.0
    with pytest.raises(DegenerateInput):
        friedman_test(average_ranks([[1.0, 2.0, 3.0]]))


def test_friedman_closed_form():
    # method 0 always best, the others tied
    losses = np.tile([0.0, 1.0, 1.0], (10, 1))
    res = friedman_test(average_ranks(losses))
    n, k = 10, 3
    direct = 12 * n / (k * (k + 1)) * ((1 - 2) ** 2 + (2.5 - 2) ** 2 + (2.5 - 2) ** 2)
    assert res.statistic == pytest.approx(direct, rel=1e-14)
    assert res.p_value == pytest.approx(math.exp(-direct / 2), rel=1e-12)  # chi2 with 2 dof


def test_wilcoxon_documented_example():
    res = wilcoxon_signed_rank([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], sided="greater")
    assert res.statistic == 6.0
    assert res.p_value == 0.125
    assert res.method == "exact"


def test_wilcoxon_all_zero():
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])


def test_wilcoxon_antisymmetry():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 15))
    ab, ba = wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a)
    n = ab.n
    assert ab.statistic + ba.statistic == n * (n + 1) / 2
    assert ab.p_value == pytest.approx(ba.p_value, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.sampled_from(["two-sided", "greater", "less"]))
def test_exact_matches_enumeration(n, seed, sided):
    # small integer differences produce plenty of ties
    d = np.random.default_rng(seed).integers(-4, 5, size=n).astype(float)
    if not np.any(d):
        return
    res = wilcoxon_signed_rank(d, np.zeros(n), sided=sided)
    w, p = wilcoxon_enumeration(d.tolist(), sided)
    assert res.statistic == w
    assert res.p_value == pytest.approx(p, abs=1e-12)


def test_null_distribution_is_symmetric():
    support, prob = exact_null_distribution(np.arange(1, 9))
    assert prob.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(prob, prob[::-1], atol=1e-15)
    assert support[-1] == 36.0


def test_normal_approximation_for_large_n():
    rng = np.random.default_rng(1)
    a = rng.normal(size=60)
    res = wilcoxon_signed_rank(a + 0.5, a - rng.normal(scale=0.1, size=60))
    assert res.method == "normal_approx"
    assert res.p_value < 1e-6


def test_cd_groups_separated_methods():
    losses = np.c_[np.zeros(10), np.arange(1, 11, dtype=float)]
    res = cd_groups(losses, ["good", "bad"])
    assert res.groups == []
    assert res.pairwise[("good", "bad")] == pytest.approx(2 / 2**10)


def test_cd_groups_identical_methods():
    res = cd_groups(np.ones((8, 2)), ["x", "y"])
    assert res.groups == [["x", "y"]]
    assert res.friedman.p_value == 1.0


OVERLAP = np.array(
    [
        [-0.6, 0.4, 1.5], [0.6, 1.7, 0.9], [1.0, 1.2, 2.1], [1.0, 1.2, -0.1],
        [1.8, 0.9, 2.0], [-0.4, 0.4, -0.5], [0.5, -1.3, 2.4], [-0.4, 1.6, 0.7],
        [-1.4, -0.9, 1.6], [-0.7, 0.8, 2.7], [0.1, 0.5, -1.0], [-0.9, 0.7, 0.9],
    ]
)


def test_cd_groups_overlapping_bars():
    res = cd_groups(OVERLAP, ["m1", "m2", "m3"])
    assert res.friedman.p_value < 0.05
    for (i, j), significant in {(0, 1): False, (1, 2): False, (0, 2): True}.items():
        _, p = wilcoxon_enumeration((OVERLAP[:, i] - OVERLAP[:, j]).tolist())
        assert (p < 0.05) == significant
    assert res.groups == [["m1", "m2"], ["m2", "m3"]]


def test_cd_groups_permutation_invariant():
    perm = [2, 0, 1]
    names = ["m1", "m2", "m3"]
    res = cd_groups(OVERLAP[:, perm], [names[i] for i in perm])
    assert sorted(map(sorted, res.groups)) == [["m1", "m2"], ["m2", "m3"]]


def test_cd_csv_and_holm():
    res = cd_groups(OVERLAP, ["m1", "m2", "m3"], correction="holm")
    # Holm only raises p-values, so groups can only grow
    assert res.groups == [["m1", "m2", "m3"]]
    lines = res.to_csv().splitlines()
    assert lines[0] == "method,avg_rank,group_ids"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["m1", "m2", "m3"]
