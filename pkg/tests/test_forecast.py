import numpy as np
import pytest

from vsforecast.dataset import Instance
from vsforecast.errors import ShapeMismatchError, SingularSystemError
from vsforecast.forecast import (
    CoupledLinearModel,
    HistoryMeanModel,
    PersistenceModel,
    RidgeARModel,
    make_model,
    oracle_forecast,
    partial_forecast,
)
from vsforecast.subset import SubsetMask


def _instance(x2d, y2d):
    return Instance(x=np.asarray(x2d, float)[:, :, None],
                    y=np.asarray(y2d, float))


def test_persistence_examples():
    model = PersistenceModel(q=3)
    out = model.predict(np.array([[[1.0]], [[7.0]]]))
    np.testing.assert_allclose(out, [[7.0, 7.0, 7.0]])
    model = PersistenceModel(q=2)
    out = model.predict(np.array([[[1.0], [-2.0]]]))
    np.testing.assert_allclose(out, [[1.0, 1.0], [-2.0, -2.0]])


def test_mean_model_examples():
    model = HistoryMeanModel(q=2)
    out = model.predict(np.array([[[1.0]], [[2.0]], [[3.0]]]))
    np.testing.assert_allclose(out, [[2.0, 2.0]])
    out = model.predict(np.zeros((4, 3, 1)))
    np.testing.assert_allclose(out, np.zeros((3, 2)))
    model = HistoryMeanModel(q=4)
    out = model.predict(np.array([[[4.0]]]))
    np.testing.assert_allclose(out, [[4.0] * 4])


def test_models_learn_horizon_from_fit():
    windows = [_instance(np.zeros((3, 2)), np.zeros((5, 2)))]
    assert PersistenceModel().fit(windows).q == 5
    assert HistoryMeanModel().fit(windows).q == 5
    with pytest.raises(RuntimeError):
        PersistenceModel().predict(np.zeros((2, 1, 1)))


def _identity_dynamics_windows(n_windows=30, q=3, n=3, seed=0):
    # q-periodic series: x[t + q] == x[t] exactly, so with p == q the
    # horizon-j map is the selector of history column j - 1
    rng = np.random.default_rng(seed)
    windows = []
    for _ in range(n_windows):
        cycle = rng.normal(size=(q, n))
        windows.append(_instance(cycle, cycle.copy()))
    return windows


def test_ridge_ar_fits_identity_dynamics():
    windows = _identity_dynamics_windows()
    model = RidgeARModel(ridge_lambda=0.0).fit(windows)
    total = 0.0
    count = 0
    for w in windows:
        pred = model.predict(w.x)
        total += float(((pred - w.y.T) ** 2).sum())
        count += pred.size
    assert total / count < 1e-8


def test_ridge_ar_shrinks_to_zero():
    rng = np.random.default_rng(1)
    windows = [_instance(rng.normal(size=(4, 2)), rng.normal(size=(3, 2)))
               for _ in range(20)]
    model = RidgeARModel(ridge_lambda=1e12).fit(windows)
    out = model.predict(windows[0].x)
    assert np.abs(out).max() < 1e-6


def test_ridge_ar_linear_ramp_exact():
    p, q = 4, 3
    windows = []
    for start in range(20):
        ramp = np.arange(start, start + p + q, dtype=float)
        windows.append(_instance(ramp[:p, None], ramp[p:, None]))
    model = RidgeARModel(ridge_lambda=0.0).fit(windows)
    probe = np.arange(50.0, 54.0)[:, None, None]
    np.testing.assert_allclose(model.predict(probe)[0],
                               np.arange(54.0, 57.0), atol=1e-6)


def test_ridge_ar_unregularized_handles_rank_deficiency():
    # constant histories are rank one; the minimum-norm fit still succeeds
    windows = [_instance(np.ones((3, 2)) * v, np.ones((2, 2)) * v)
               for v in (1.0, 2.0, 3.0)]
    model = RidgeARModel(ridge_lambda=0.0).fit(windows)
    np.testing.assert_allclose(model.predict(windows[1].x),
                               windows[1].y.T, atol=1e-9)


def test_coupled_linear_singular_without_regularization():
    # fewer windows than variables leaves the last-value gram singular
    rng = np.random.default_rng(12)
    windows = [_instance(rng.normal(size=(2, 6)), rng.normal(size=(2, 6)))
               for _ in range(3)]
    with pytest.raises(SingularSystemError):
        CoupledLinearModel(ridge_lambda=0.0).fit(windows)


def test_coupled_linear_full_and_truncated():
    rng = np.random.default_rng(2)
    windows = [_instance(rng.normal(size=(3, 4)), rng.normal(size=(2, 4)))
               for _ in range(40)]
    model = CoupledLinearModel(ridge_lambda=1e-3).fit(windows)
    full = model.predict(windows[0].x)
    assert full.shape == (4, 2)
    part = model.predict(windows[0].x[:, :2, :])
    assert part.shape == (2, 2)
    with pytest.raises(ShapeMismatchError):
        model.predict(np.zeros((3, 6, 1)))


def test_make_model_registry():
    assert isinstance(make_model("persistence"), PersistenceModel)
    assert isinstance(make_model("linear_ar", ridge_lambda=2.0), RidgeARModel)
    with pytest.raises(ValueError):
        make_model("transformer")


@pytest.fixture
def fitted_models():
    rng = np.random.default_rng(7)
    windows = [_instance(rng.normal(size=(5, 6)), rng.normal(size=(4, 6)))
               for _ in range(50)]
    models = {
        "persistence": PersistenceModel().fit(windows),
        "mean": HistoryMeanModel().fit(windows),
        "linear_ar": RidgeARModel(0.1).fit(windows),
    }
    return windows, models


def test_oracle_projection_and_shapes(fitted_models):
    windows, models = fitted_models
    subset = SubsetMask(np.array([1, 4]), n_total=6)
    for model in models.values():
        out = oracle_forecast(model, windows[0], subset)
        assert out.yhat.shape == (2, 4)
        assert out.subset is subset
    full = SubsetMask.full(6)
    out = oracle_forecast(models["persistence"], windows[0], full)
    np.testing.assert_array_equal(
        out.yhat, models["persistence"].predict(windows[0].x))


def test_partial_equals_oracle_for_per_variable_models(fitted_models):
    windows, models = fitted_models
    rng = np.random.default_rng(9)
    for _ in range(20):
        size = int(rng.integers(1, 6))
        idx = np.sort(rng.choice(6, size=size, replace=False))
        subset = SubsetMask(idx, n_total=6)
        window = windows[int(rng.integers(len(windows)))]
        for model in models.values():
            a = oracle_forecast(model, window, subset).yhat
            b = partial_forecast(model, window, subset).yhat
            np.testing.assert_allclose(a, b, atol=1e-12)


def test_partial_shape_and_composition(fitted_models):
    windows, models = fitted_models
    subset = SubsetMask(np.array([3]), n_total=6)
    out = partial_forecast(models["persistence"], windows[0], subset)
    assert out.yhat.shape == (1, 4)
    np.testing.assert_allclose(out.yhat[0], windows[0].x[-1, 3, 0])


def test_predict_deterministic(fitted_models):
    windows, models = fitted_models
    for model in models.values():
        a = model.predict(windows[0].x)
        b = model.predict(windows[0].x)
        assert a.tobytes() == b.tobytes()


def test_forecast_shape_mismatch(fitted_models):
    windows, models = fitted_models
    subset = SubsetMask(np.array([0]), n_total=5)
    with pytest.raises(ShapeMismatchError):
        oracle_forecast(models["persistence"], windows[0], subset)
