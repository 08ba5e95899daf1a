import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aalf.errors import BOutOfRange, EmptySegment, LengthMismatch
from aalf.oracle import (
    budget,
    default_p_grid,
    floor_sweep,
    loss_diff,
    optimal_selection,
    selection_loss,
)

from oracles import brute_force_reduced, brute_force_selection_loss


def test_loss_diff_examples():
    assert loss_diff([1.0], [2.0], [1.0])[0] == -1.0
    assert loss_diff([4.0], [4.0], [1.0])[0] == 0.0
    assert loss_diff([3.0], [0.0], [0.0])[0] == 9.0
    with pytest.raises(LengthMismatch):
        loss_diff([1.0, 2.0], [1.0], [1.0])


def test_optimal_selection_documented_instance():
    ell = np.array([-3.0, 3.0, -1.0, 8.0])
    sel = optimal_selection(ell, 3)
    np.testing.assert_array_equal(sel.s, [1, 1, 1, 0])
    # brute force over all 16 selections of the reduced objective
    assert float(ell @ sel.s) == brute_force_reduced(ell, 3)


def test_optimal_selection_unconstrained_and_ties():
    np.testing.assert_array_equal(optimal_selection(np.array([1.0, 2.0, 0.5]), 0).s, [0, 0, 0])
    np.testing.assert_array_equal(optimal_selection(np.zeros(5), 2).s, np.ones(5))
    np.testing.assert_array_equal(optimal_selection(np.zeros(5), 0).s, np.ones(5))


def test_optimal_selection_overshoots_on_ties():
    ell = np.array([-1.0, 2.0, 2.0, 5.0])
    sel = optimal_selection(ell, 2)
    np.testing.assert_array_equal(sel.s, [1, 1, 1, 0])
    assert sel.achieved_count == 3 and sel.B == 2


def test_optimal_selection_b_out_of_range():
    with pytest.raises(BOutOfRange):
        optimal_selection(np.zeros(3), 4)
    with pytest.raises(BOutOfRange):
        optimal_selection(np.zeros(3), -1)


def test_selection_loss_examples():
    f, g, y = np.array([1.0, 0.0]), np.array([0.0, 2.0]), np.zeros(2)
    assert selection_loss(f, g, y, np.ones(2)) == 1.0
    assert selection_loss(f, g, y, np.zeros(2)) == 4.0
    # f errs (1, 0), g errs (0, 2): choosing g then f is perfect
    assert selection_loss(f, g, y, np.array([0, 1])) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.data())
def test_oracle_matches_exhaustive_search(T, data):
    floats = st.floats(-5, 5, allow_nan=False)
    f = np.array(data.draw(st.lists(floats, min_size=T, max_size=T)))
    g = np.array(data.draw(st.lists(floats, min_size=T, max_size=T)))
    y = np.array(data.draw(st.lists(floats, min_size=T, max_size=T)))
    B = data.draw(st.integers(0, T))
    sel = optimal_selection(loss_diff(f, g, y), B)
    best, _ = brute_force_selection_loss(f, g, y, B)
    assert sel.achieved_count >= B
    assert selection_loss(f, g, y, sel) == pytest.approx(best, abs=1e-12, rel=1e-12)


def test_monotone_in_budget_and_dominance():
    rng = np.random.default_rng(0)
    f, g, y = rng.normal(size=(3, 60))
    losses = [selection_loss(f, g, y, optimal_selection(loss_diff(f, g, y), B)) for B in range(61)]
    assert all(a <= b + 1e-12 for a, b in zip(losses, losses[1:]))
    assert losses[0] <= min(np.sum((y - f) ** 2), np.sum((y - g) ** 2))


def test_budget_is_ceiling():
    assert budget(0.95, 100) == 95
    assert budget(0.75, 4) == 3
    assert budget(0.01, 10) == 1
    assert budget(1.0, 7) == 7
    assert budget(0.5, 3) == 2


def test_floor_sweep_endpoint_and_flat_region():
    rng = np.random.default_rng(1)
    y = rng.normal(size=400)
    f = y + rng.normal(scale=1.0, size=400)
    g = y + rng.normal(scale=0.25, size=400)
    curve = floor_sweep(f, g, y)
    assert len(curve.points) == 100
    assert curve.points[-1].p == 1.0
    assert curve.points[-1].rmse == pytest.approx(np.sqrt(np.mean((f - y) ** 2)), abs=1e-10)
    assert np.all(curve.achieved_p >= curve.p - 1e-12)
    # non-increasing as p decreases
    assert np.all(np.diff(curve.rmse) >= -1e-12)
    ell = loss_diff(f, g, y)
    free = np.count_nonzero(ell <= 0) / ell.size
    flat = curve.rmse[curve.p <= free]
    assert flat.size and np.all(flat == flat[0])


def test_floor_sweep_errors():
    with pytest.raises(EmptySegment):
        floor_sweep([], [], [])
    with pytest.raises(ValueError):
        floor_sweep([1.0], [1.0], [1.0], [0.0])


def test_default_grid():
    grid = default_p_grid()
    assert grid.size == 100 and grid[0] > 0 and grid[-1] == 1.0


def test_floor_curve_csv():
    curve = floor_sweep([1.0, 2.0], [1.5, 1.0], [1.2, 1.1], [0.5, 1.0])
    lines = curve.to_csv().splitlines()
    assert lines[0] == "p,achieved_p,rmse"
    assert len(lines) == 3
