import json

import numpy as np
import pytest

from aalf.errors import (
    AlignmentMismatch,
    DimensionMismatch,
    DivergenceDetected,
    SingularSystem,
    UnknownSeries,
)
from aalf.forecasters import (
    ARModel,
    MLPModel,
    PredictionTable,
    TrainConfig,
    baseline_last,
    baseline_mean,
    fit_ar,
    fit_mlp,
    import_predictions,
    init_mlp,
    mlp_gradient,
    mlp_loss,
    predict_ar,
    predict_mlp,
    zero_mlp,
)
from aalf.ingest import WindowedSet, make_windows, split_series

from oracles import central_differences, normal_equations_oracle


def ar2_series(n, phi=(0.5, -0.3), sigma=0.01, seed=0):
    rng = np.random.default_rng(seed)
    x = np.zeros(n + 200)
    x[:2] = rng.normal(size=2)
    for t in range(2, x.size):
        x[t] = phi[0] * x[t - 1] + phi[1] * x[t - 2] + sigma * rng.normal()
    return x[200:]


# ------------------------------------------------------------------------ AR

def test_fit_ar_doubling_series():
    values = 2.0 ** np.arange(12)
    m = fit_ar(make_windows(values, 1), ridge=0.0)
    np.testing.assert_allclose(m.phi, [2.0], rtol=1e-12)
    assert m.residual_std < 1e-9


def test_fit_ar_recovers_ar2_and_matches_normal_equations():
    values = ar2_series(1002)
    w = make_windows(values, 2)
    # windows are oldest-first, so phi[-1] multiplies y_{t-1}
    m = fit_ar(w, ridge=0.0)
    assert abs(m.phi[1] - 0.5) < 0.05 and abs(m.phi[0] + 0.3) < 0.05
    np.testing.assert_allclose(m.phi, normal_equations_oracle(w.inputs, w.targets), rtol=0, atol=1e-8)


def test_fit_ar_zero_data():
    w = WindowedSet(np.zeros((20, 3)), np.zeros(20), np.arange(20))
    m = fit_ar(w, ridge=1e-8)
    np.testing.assert_array_equal(m.phi, np.zeros(3))


def test_fit_ar_singular_without_ridge():
    w = WindowedSet(np.zeros((20, 3)), np.zeros(20), np.arange(20))
    with pytest.raises(SingularSystem):
        fit_ar(w, ridge=0.0)


def test_fit_ar_ridge_matches_oracle():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(40, 5)), rng.normal(size=40)
    m = fit_ar(WindowedSet(X, y, np.arange(40)), ridge=0.7)
    np.testing.assert_allclose(m.phi, normal_equations_oracle(X, y, ridge=0.7), atol=1e-10)


def test_fit_ar_is_optimal_against_random_coefficients():
    rng = np.random.default_rng(4)
    w = make_windows(ar2_series(300, sigma=0.3, seed=4), 4)
    m = fit_ar(w, ridge=0.0)
    best = np.sum((w.inputs @ m.phi - w.targets) ** 2)
    for _ in range(100):
        phi = rng.normal(size=4)
        assert best <= np.sum((w.inputs @ phi - w.targets) ** 2)


def test_fit_ar_intercept():
    values = 3.0 + ar2_series(500, sigma=0.05, seed=5)
    m = fit_ar(make_windows(values, 2), intercept=True)
    assert m.intercept is not None
    assert abs(m.intercept - 3.0 * (1 - 0.5 + 0.3)) < 0.1


def test_predict_ar():
    assert predict_ar(ARModel(np.array([0.0, 0.0, 1.0])), [7, 8, 9]) == 9
    assert predict_ar(ARModel(np.array([0.5, 0.5])), [2, 4]) == 3
    with pytest.raises(DimensionMismatch):
        predict_ar(ARModel(np.zeros(3)), [1, 2])


def test_ar_superposition():
    rng = np.random.default_rng(6)
    m = ARModel(rng.normal(size=6))
    for _ in range(50):
        x, z = rng.normal(size=6), rng.normal(size=6)
        a, b = rng.normal(size=2)
        lhs = predict_ar(m, a * x + b * z)
        assert abs(lhs - (a * predict_ar(m, x) + b * predict_ar(m, z))) < 1e-10


def test_ar_json_round_trip_is_bit_exact():
    m = fit_ar(make_windows(ar2_series(200, sigma=0.2), 3))
    back = ARModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert back.phi.tobytes() == m.phi.tobytes()
    assert back.residual_std == m.residual_std


# ----------------------------------------------------------------------- MLP

def test_zero_network_gradient_and_output():
    m = zero_mlp(4, (3, 3))
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(7, 4)), rng.normal(size=7)
    g = mlp_gradient(m, X, y)
    assert g.biases[2][0] == pytest.approx(-2 * y.mean(), rel=1e-12)
    assert predict_mlp(m, X[0]) == 0.0
    np.testing.assert_array_equal(predict_mlp(m, X), np.zeros(7))


def _fd_check(model, X, y):
    analytic = mlp_gradient(model, X, y).params()
    numeric = central_differences(lambda: mlp_loss(model, X, y), model.params(), step=1e-5)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.abs(a) + np.abs(n), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst


def test_gradient_matches_finite_differences_small():
    rng = np.random.default_rng(11)
    m = init_mlp(4, (3, 3), rng)
    for b in m.biases:
        b += rng.normal(scale=0.1, size=b.shape)
    X, y = rng.normal(size=(5, 4)), rng.normal(size=5)
    assert _fd_check(m, X, y) < 1e-4


def test_dead_relu_unit_gets_zero_gradient():
    rng = np.random.default_rng(2)
    m = init_mlp(3, (4, 4), rng)
    X = np.abs(rng.normal(size=(6, 3)))
    m.weights[0][:, 1] = -1.0  # unit 1 of the first layer never activates on positive inputs
    m.biases[0][1] = -0.5
    g = mlp_gradient(m, X, rng.normal(size=6))
    np.testing.assert_array_equal(g.weights[0][:, 1], 0.0)
    assert g.biases[0][1] == 0.0


def test_fit_mlp_learns_linear_target():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(512, 4))
    w = WindowedSet(X, X.sum(axis=1), np.arange(512))
    cfg = TrainConfig(epochs=200, batch_size=32, learning_rate=1e-2, seed=1, hidden_sizes=(8, 8))
    m = fit_mlp(w, cfg)
    pred = predict_mlp(m, X)
    assert np.sqrt(np.mean((pred - w.targets) ** 2)) < 0.05


def test_fit_mlp_diverges_with_huge_learning_rate():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(64, 4))
    w = WindowedSet(X, X.sum(axis=1), np.arange(64))
    for opt in ("adam", "sgd"):
        with pytest.raises(DivergenceDetected):
            fit_mlp(w, TrainConfig(epochs=50, batch_size=16, learning_rate=1e6, optimizer=opt, hidden_sizes=(8, 8)))


def test_fit_mlp_is_deterministic():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 3))
    w = WindowedSet(X, np.sin(X).sum(axis=1), np.arange(100))
    cfg = TrainConfig(epochs=5, batch_size=16, seed=9, hidden_sizes=(6, 5))
    a, b = fit_mlp(w, cfg), fit_mlp(w, cfg)
    for pa, pb in zip(a.params(), b.params()):
        assert pa.tobytes() == pb.tobytes()
    c = fit_mlp(w, TrainConfig(epochs=5, batch_size=16, seed=10, hidden_sizes=(6, 5)))
    assert a.weights[0].tobytes() != c.weights[0].tobytes()


def test_mlp_dict_round_trip():
    m = init_mlp(5, (4, 3), np.random.default_rng(0))
    back = MLPModel.from_dict(json.loads(json.dumps(m.to_dict())))
    for pa, pb in zip(m.params(), back.params()):
        assert pa.tobytes() == pb.tobytes()
    with pytest.raises(DimensionMismatch):
        predict_mlp(m, np.zeros(4))


# ------------------------------------------------------------------ baselines

def test_baselines():
    assert baseline_last([1, 2, 3]) == 3
    assert baseline_mean([1, 2, 3]) == 2
    np.testing.assert_array_equal(baseline_last(np.array([[1, 2], [3, 4]])), [2, 4])
    with pytest.raises(DimensionMismatch):
        baseline_last([1, 2], lag=3)


# ------------------------------------------------------------ prediction table

def _table():
    values = np.arange(40, dtype=float)
    sp = split_series(40)
    table = PredictionTable()
    for name in ("a", "b"):
        for seg in ("train", "val", "test"):
            w = make_windows(values, 3, seg, sp)
            table.add_segment(name, seg, w)
            table.register("f", name, seg, w.targets + 0.5)
    return table


def _file(table, drop=0, extra_series=False, segments=("val", "test")):
    rows = ["series,segment,origin_index,value"]
    for (name, seg), entry in table.entries.items():
        if seg not in segments:
            continue
        for o, y in zip(entry.origin, entry.truth):
            rows.append(f"{name},{seg},{o},{float(y) - 1.0!r}")
    if drop:
        rows = rows[:-drop]
    if extra_series:
        rows.append("zzz,test,39,1.0")
    return "\n".join(rows) + "\n"


def test_import_exact_keys_accepted():
    table = _table()
    import_predictions(table, _file(table), "g", segments=("val", "test"))
    entry = table.get("a", "test")
    np.testing.assert_array_equal(entry["g"], entry.truth - 1.0)
    assert table.provenance == {"f": "trained_here", "g": "imported"}
    assert len(entry["g"]) == len(entry["f"]) == len(entry.truth)


def test_import_missing_row():
    table = _table()
    with pytest.raises(AlignmentMismatch):
        import_predictions(table, _file(table, drop=1), "g", segments=("val", "test"))


def test_import_unknown_series():
    table = _table()
    with pytest.raises(UnknownSeries):
        import_predictions(table, _file(table, extra_series=True), "g", segments=("val", "test"))


def test_import_rows_in_any_order():
    table = _table()
    lines = _file(table).splitlines()
    shuffled = "\n".join([lines[0], *reversed(lines[1:])]) + "\n"
    import_predictions(table, shuffled, "g", segments=("val", "test"))
    entry = table.get("b", "val")
    np.testing.assert_array_equal(entry["g"], entry.truth - 1.0)


def test_table_save_load(tmp_path):
    table = _table()
    import_predictions(table, _file(table), "g", segments=("val", "test"))
    table.save(tmp_path)
    back = PredictionTable.load(tmp_path)
    assert back.provenance == table.provenance
    for key, entry in table.entries.items():
        other = back.entries[key]
        np.testing.assert_array_equal(other.origin, entry.origin)
        for tag, values in entry.preds.items():
            assert other.preds[tag].tobytes() == values.tobytes()
