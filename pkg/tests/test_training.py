import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tskanmixer.mixer import ForecastModel, ModelConfig
from tskanmixer.training import (
    AdamState, DataError, TrainConfig, TrainHistory, TrainingDivergedError, WindowedDataset, adam_step,
    evaluate, loss_and_grad, persistence_forecast, standardize, train, window,
)


def tiny_data(T=120, C=2, L=6, H=3, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    series = np.stack([np.sin(t / 3 + c) for c in range(C)], axis=1) + 0.05 * rng.normal(size=(T, C))
    ranges = {"train": (0, 80), "valid": (80, 100), "test": (100, T)}
    normed, _, _ = standardize(series, ranges["train"])
    return WindowedDataset.from_series(normed, ranges, L, H)


def tiny_model(variant="tsmixer", seed=0, **over):
    kw = dict(variant=variant, L=6, H=3, C=2, blocks=1, hidden_size=4, dropout=0.1, seed=seed)
    if variant != "tsmixer":
        kw.update(kan_dim=3, kan_grid=3, kan_k=2)
    kw.update(over)
    return ForecastModel(ModelConfig(**kw))


# ---------------------------------------------------------------- standardize

def test_standardize_two_point():
    out, means, stds = standardize(np.array([[5.0], [5.0], [7.0], [7.0]]), (0, 4))
    assert means.tolist() == [6.0] and stds.tolist() == [1.0]
    assert out[:, 0].tolist() == [-1.0, -1.0, 1.0, 1.0]


def test_standardize_idempotent_on_standard_data():
    rng = np.random.default_rng(0)
    x, _, _ = standardize(rng.normal(size=(50, 3)), (0, 50))
    again, _, _ = standardize(x, (0, 50))
    np.testing.assert_allclose(again, x, atol=1e-12)


def test_standardize_uses_train_range_only():
    rng = np.random.default_rng(1)
    series = rng.normal(3.0, 2.0, size=(200, 4))
    out, means, stds = standardize(series, (0, 120))
    np.testing.assert_allclose(out[:120].mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(out[:120].std(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(means, series[:120].mean(axis=0))
    np.testing.assert_allclose(out[150], (series[150] - means) / stds)


def test_standardize_zero_variance_names_feature():
    series = np.ones((10, 3))
    series[:, 0] = np.arange(10)
    with pytest.raises(DataError, match="feature 1"):
        standardize(series, (0, 10))


def test_standardize_empty_range():
    with pytest.raises(DataError):
        standardize(np.ones((5, 1)), (3, 3))


# ---------------------------------------------------------------- windowing

def test_window_count_and_alignment():
    series = np.arange(10, dtype=float)[:, None]
    X, Y, starts = window(series, 4, 2)
    assert len(X) == 5
    assert Y[0, 0, 0] == 4.0
    np.testing.assert_array_equal(X[2, :, 0], [2, 3, 4, 5])
    np.testing.assert_array_equal(Y[2, :, 0], [6, 7])


def test_window_too_short():
    with pytest.raises(DataError):
        window(np.zeros((5, 1)), 4, 2)


def test_windows_stay_inside_partitions():
    series = np.arange(100, dtype=float)[:, None]
    ranges = {"train": (0, 60), "valid": (60, 80), "test": (80, 100)}
    ds = WindowedDataset.from_series(series, ranges, 8, 4)
    for name in ("train", "valid", "test"):
        lo, hi = ranges[name]
        X, Y = getattr(ds, name)
        assert X.min() >= lo and Y.max() < hi
        assert len(X) == hi - lo - 12 + 1


def test_lookback_from_previous_keeps_targets_inside():
    series = np.arange(100, dtype=float)[:, None]
    ranges = {"train": (0, 60), "valid": (60, 70), "test": (70, 100)}
    ds = WindowedDataset.from_series(series, ranges, 8, 4, lookback_from_previous=True)
    Xv, Yv = ds.valid
    assert Yv.min() >= 60 and Yv.max() < 70
    assert Xv.min() == 52
    assert len(Xv) == 10 - 4 + 1


# ---------------------------------------------------------------- losses / metrics

def test_loss_gradients():
    rng = np.random.default_rng(0)
    p, y = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    for kind in ("mse", "mae"):
        _, g = loss_and_grad(p, y, kind)
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            q = p.copy()
            q[idx] += 1e-6
            r = p.copy()
            r[idx] -= 1e-6
            num[idx] = (loss_and_grad(q, y, kind)[0] - loss_and_grad(r, y, kind)[0]) / 2e-6
        np.testing.assert_allclose(g, num, atol=1e-8)


class ConstModel:
    """Stand-in with the forward() signature evaluate() relies on."""

    def __init__(self, fn):
        self.fn = fn

    def forward(self, x, training=False):
        return self.fn(x), None


def test_evaluate_perfect_and_unit_error():
    Y = np.random.default_rng(0).normal(size=(5, 3, 2))
    assert evaluate(ConstModel(lambda x: Y[: len(x)]), np.zeros((5, 4, 2)), Y) == (0.0, 0.0)
    ones = ConstModel(lambda x: np.ones((len(x), 3, 2)))
    assert evaluate(ones, np.zeros((5, 4, 2)), np.zeros((5, 3, 2))) == (1.0, 1.0)


def test_evaluate_matches_flat_loop():
    rng = np.random.default_rng(1)
    Y = rng.normal(size=(7, 3, 2))
    P = rng.normal(size=(7, 3, 2))
    model = ConstModel(lambda x: P[x[:, 0, 0].astype(int)])
    X = np.zeros((7, 4, 2))
    X[:, 0, 0] = np.arange(7)
    mse, mae = evaluate(model, X, Y, batch_size=3)
    sq = ab = 0.0
    n = 0
    for a, b in zip(P.ravel().tolist(), Y.ravel().tolist()):
        sq += (a - b) ** 2
        ab += abs(a - b)
        n += 1
    assert abs(mse - sq / n) < 1e-12 and abs(mae - ab / n) < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 12))
def test_evaluate_batch_invariant(bs):
    data = tiny_data()
    model = tiny_model(dropout=0.0)
    ref = evaluate(model, *data.test, batch_size=1000)
    got = evaluate(model, *data.test, batch_size=bs)
    np.testing.assert_allclose(got, ref, rtol=1e-12)


def test_persistence_forecast():
    X = np.arange(12, dtype=float).reshape(1, 4, 3)
    np.testing.assert_array_equal(persistence_forecast(X, 2), [[[9, 10, 11], [9, 10, 11]]])


# ---------------------------------------------------------------- adam

def test_adam_zero_gradient_leaves_params():
    p = {"w": np.array([1.0, -2.0])}
    adam_step(p, {"w": np.zeros(2)}, AdamState(), 0.1)
    assert p["w"].tolist() == [1.0, -2.0]


def test_adam_first_step_magnitude_is_lr():
    p = {"w": np.array([1.0, 1.0, 1.0])}
    g = np.array([0.3, -5.0, 1e-3])
    adam_step(p, {"w": g}, AdamState(), 0.01)
    # bias-corrected first step: m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
    expected = 1.0 - 0.01 * g / (np.abs(g) + 1e-8)
    np.testing.assert_allclose(p["w"], expected, rtol=0, atol=1e-15)
    np.testing.assert_allclose(np.abs(p["w"] - 1.0), 0.01, rtol=1e-4)


def test_adam_quadratic_convergence():
    # scalar reference simulation of the same recurrences
    w_ref, m, v = 1.0, 0.0, 0.0
    for t in range(1, 501):
        g = 2 * w_ref
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w_ref -= 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    p = {"w": np.array([1.0])}
    st_ = AdamState()
    for _ in range(500):
        adam_step(p, {"w": 2 * p["w"]}, st_, 0.01)
    assert abs(p["w"][0]) < 1e-3
    assert p["w"][0] == pytest.approx(w_ref, abs=1e-12)


# ---------------------------------------------------------------- training loop

def test_train_determinism():
    data = tiny_data()
    cfg = TrainConfig(max_epochs=4, patience=3, batch_size=16, learning_rate=1e-2, seed=3)
    _, h1 = train(tiny_model("tskanmixer_v01"), data, cfg)
    _, h2 = train(tiny_model("tskanmixer_v01"), data, cfg)
    assert h1.train_loss == h2.train_loss and h1.valid_loss == h2.valid_loss


def test_train_returns_best_snapshot():
    data = tiny_data()
    cfg = TrainConfig(max_epochs=8, patience=8, batch_size=16, learning_rate=5e-2, seed=0)
    model, hist = train(tiny_model(), data, cfg)
    best = min(hist.valid_loss)
    assert hist.valid_loss[hist.best_epoch - 1] == best
    assert best <= hist.valid_loss[0]
    from tskanmixer.training import _eval_loss
    assert _eval_loss(model, *data.valid, "mse") == pytest.approx(best, rel=1e-12)


def test_early_stopping_on_worsening_validation(monkeypatch):
    import tskanmixer.training as tr

    losses = iter([1.0, 2.0, 3.0, 4.0])
    monkeypatch.setattr(tr, "_eval_loss", lambda *a, **k: next(losses))
    _, hist = train(tiny_model(), tiny_data(), TrainConfig(max_epochs=10, patience=1, batch_size=32))
    assert hist.epochs == 2
    assert hist.best_epoch == 1


def test_mae_training_objective_runs():
    _, hist = train(tiny_model(), tiny_data(), TrainConfig(max_epochs=2, patience=2, loss="mae", batch_size=32))
    assert len(hist.valid_loss) == 2


def test_validation_loss_defaults_to_mse():
    from tskanmixer.training import _eval_loss
    data = tiny_data()
    cfg = TrainConfig(max_epochs=2, patience=2, loss="mae", batch_size=32)
    model, hist = train(tiny_model(), data, cfg)
    assert hist.valid_loss[hist.best_epoch - 1] == pytest.approx(_eval_loss(model, *data.valid, "mse"), rel=1e-12)
    _, hist_mae = train(tiny_model(), data, TrainConfig(max_epochs=2, patience=2, loss="mae", batch_size=32,
                                                        valid_loss="mae"))
    assert hist_mae.train_loss == hist.train_loss and hist_mae.valid_loss != hist.valid_loss


def test_divergence_is_reported():
    model = tiny_model()
    cfg = TrainConfig(max_epochs=3, patience=3, batch_size=16, learning_rate=1e-3)
    data = tiny_data()
    Xtr, Ytr = data.train
    Ytr = Ytr.copy()
    Ytr[5] = np.inf
    data.train = (Xtr, Ytr)
    with pytest.raises(TrainingDivergedError, match="epoch 1"):
        train(model, data, cfg)


def test_history_csv(tmp_path):
    h = TrainHistory([0.5, 0.25], [0.6, 0.3], best_epoch=2)
    h.to_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text() == "epoch,train_loss,valid_loss\n1,0.5,0.6\n2,0.25,0.3\n"


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
