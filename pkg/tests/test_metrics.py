import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aalf.errors import Empty, LengthMismatch
from aalf.metrics import (
    ConfusionCounts,
    confusion,
    dataset_average,
    empirical_p,
    f1_pooled,
    rmse,
    smape,
)


def test_rmse():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))
    assert rmse([2.0], [5.0]) == 3.0
    assert rmse([0.0, 0.0], [3.0, 4.0], mean=False) == 5.0
    with pytest.raises(LengthMismatch):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(Empty):
        rmse([], [])


def test_smape():
    assert smape([3.0, -2.0], [3.0, -2.0]) == 0.0
    assert smape([2.0], [0.0]) == 2.0
    assert smape([0.0], [0.0]) == 0.0


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=30))
def test_smape_bounded_and_symmetric(pairs):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    v = smape(a, b)
    assert 0.0 <= v <= 2.0
    assert v == pytest.approx(smape(b, a), abs=1e-12)


grid_values = st.lists(st.integers(-8000, 8000).map(lambda k: k / 8.0), min_size=1, max_size=30)


@given(grid_values, grid_values)
def test_rmse_nonnegative(a, b):
    # values on a 1/8 grid so squared differences never underflow
    n = min(len(a), len(b))
    v = rmse(a[:n], b[:n])
    assert v >= 0.0
    assert (v == 0.0) == bool(np.all(np.array(a[:n]) == np.array(b[:n])))


def test_pooled_f1():
    assert f1_pooled([ConfusionCounts(tp=2, fp=1, fn=1)]) == pytest.approx(2 / 3)
    assert f1_pooled([confusion([1, 0, 1], [1, 0, 1])]) == 1.0
    per_series = [ConfusionCounts(1, 0, 0), ConfusionCounts(1, 1, 1)]
    pooled = f1_pooled(per_series)
    averaged = np.mean([c.f1() for c in per_series])
    assert pooled == pytest.approx(2 / 3)
    assert averaged == pytest.approx(0.75)
    assert f1_pooled([ConfusionCounts(tn=4)]) == 0.0


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60), st.integers(1, 6))
def test_pooled_f1_partition_invariant(pairs, parts):
    pred = np.array([p[0] for p in pairs])
    true = np.array([p[1] for p in pairs])
    whole = f1_pooled([confusion(pred, true)])
    cuts = np.array_split(np.arange(len(pairs)), parts)
    split = f1_pooled([confusion(pred[c], true[c]) for c in cuts])
    assert whole == split
    assert confusion(pred, true).total == len(pairs)


def test_empirical_p_and_average():
    assert empirical_p([1, 0, 1, 1]) == 0.75
    assert empirical_p(np.ones(9)) == 1.0
    assert dataset_average([0.2, 0.4]) == pytest.approx(0.3)
    with pytest.raises(Empty):
        dataset_average([])
