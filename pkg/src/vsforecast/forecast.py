"""Forecast model interface and closed-form baselines.

A model maps a (P, V, D) input tensor to a (V, Q) forecast matrix; output
row i is the forecast for input variable row i. V is dynamic: one fitted
model serves full-variable, subset, and spliced inputs alike.
"""

from __future__ import annotations

import numpy as np

from .dataset import Instance
from .errors import ShapeMismatchError, SingularSystemError
from .subset import SubsetMask


class ForecastModel:
    """Behavioral contract: fit(windows) then deterministic predict(x)."""

    def fit(self, windows: list[Instance]) -> "ForecastModel":
        raise NotImplementedError

    def predict(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _check_input(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeMismatchError(f"predict expects (P, V, D), got shape {x.shape}")
    return x


class PersistenceModel(ForecastModel):
    """Repeat each variable's last observed primary value across the horizon."""

    def __init__(self, q: int | None = None):
        self.q = q

    def fit(self, windows):
        if windows:
            self.q = windows[0].q
        return self

    def predict(self, x):
        x = _check_input(x)
        if self.q is None:
            raise RuntimeError("horizon unknown, call fit first or pass q")
        last = x[-1, :, 0]
        return np.repeat(last[:, np.newaxis], self.q, axis=1)


class HistoryMeanModel(ForecastModel):
    """Forecast each variable's mean primary value over the input steps."""

    def __init__(self, q: int | None = None):
        self.q = q

    def fit(self, windows):
        if windows:
            self.q = windows[0].q
        return self

    def predict(self, x):
        x = _check_input(x)
        if self.q is None:
            raise RuntimeError("horizon unknown, call fit first or pass q")
        mean = x[:, :, 0].mean(axis=0)
        return np.repeat(mean[:, np.newaxis], self.q, axis=1)


class RidgeARModel(ForecastModel):
    """Per-horizon ridge regression from a variable's own P-step history.

    One coefficient vector per horizon step, shared across variables and
    trained by pooling every variable's windows. No intercept, so in the
    heavy-regularization limit forecasts shrink to zero. With zero
    regularization the fit is the minimum-norm least-squares solution,
    which handles rank-deficient but exactly representable dynamics.
    """

    def __init__(self, ridge_lambda: float = 1.0):
        if ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {ridge_lambda}")
        self.ridge_lambda = float(ridge_lambda)
        self.coef: np.ndarray | None = None  # (P, Q)

    def fit(self, windows):
        if not windows:
            raise ValueError("fit requires at least one training window")
        p = windows[0].p
        design = np.concatenate([w.x[:, :, 0].T for w in windows], axis=0)
        targets = np.concatenate([w.y.T for w in windows], axis=0)
        try:
            if self.ridge_lambda == 0.0:
                self.coef = np.linalg.lstsq(design, targets, rcond=None)[0]
            else:
                gram = design.T @ design + self.ridge_lambda * np.eye(p)
                self.coef = np.linalg.solve(gram, design.T @ targets)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                "least-squares fit failed on a rank-deficient design") from exc
        return self

    def predict(self, x):
        x = _check_input(x)
        if self.coef is None:
            raise RuntimeError("model is not fitted")
        if x.shape[0] != self.coef.shape[0]:
            raise ShapeMismatchError(
                f"input has {x.shape[0]} timesteps, model was fit with "
                f"{self.coef.shape[0]}")
        return x[:, :, 0].T @ self.coef


class CoupledLinearModel(ForecastModel):
    """Cross-variable test model: each variable's forecast is a learned
    linear combination of every input variable's last primary value.

    With fewer input rows than trained variables, the leading square block
    of the coefficient matrix is applied positionally, so subset inputs are
    misread exactly the way a trained cross-variable architecture misreads
    them, while a spliced full-variable input restores the trained layout.
    """

    def __init__(self, ridge_lambda: float = 1e-3):
        if ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {ridge_lambda}")
        self.ridge_lambda = float(ridge_lambda)
        self.coef: np.ndarray | None = None  # (N, Q*N), column q*N+v maps to A_q[v]
        self.n_trained: int | None = None
        self.q: int | None = None

    def fit(self, windows):
        if not windows:
            raise ValueError("fit requires at least one training window")
        n = windows[0].v
        q = windows[0].q
        last = np.stack([w.x[-1, :, 0] for w in windows], axis=0)  # (C, N)
        targets = np.stack([w.y.reshape(-1) for w in windows], axis=0)  # (C, Q*N)
        gram = last.T @ last + self.ridge_lambda * np.eye(n)
        try:
            self.coef = np.linalg.solve(gram, last.T @ targets)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                "last-value design is rank deficient and ridge_lambda is 0") from exc
        self.n_trained = n
        self.q = q
        return self

    def predict(self, x):
        x = _check_input(x)
        if self.coef is None:
            raise RuntimeError("model is not fitted")
        v = x.shape[1]
        if v > self.n_trained:
            raise ShapeMismatchError(
                f"input has {v} variables, model was trained on {self.n_trained}")
        last = x[-1, :, 0]
        if v == self.n_trained:
            flat = last @ self.coef  # (Q*N,)
            return flat.reshape(self.q, self.n_trained).T
        out = np.empty((v, self.q))
        for step in range(self.q):
            block = self.coef[:v, step * self.n_trained:
                              step * self.n_trained + v]
            out[:, step] = last @ block
        return out


MODEL_REGISTRY = {
    "persistence": PersistenceModel,
    "mean": HistoryMeanModel,
    "linear_ar": RidgeARModel,
    "coupled_linear": CoupledLinearModel,
}


def make_model(name: str, **params) -> ForecastModel:
    if name not in MODEL_REGISTRY:
        raise ValueError(
            f"unknown model {name!r}, choose from {sorted(MODEL_REGISTRY)}")
    return MODEL_REGISTRY[name](**params)


class ForecastMatrix:
    """A (V, Q) forecast with an optional mask naming the variable rows."""

    __slots__ = ("yhat", "subset")

    def __init__(self, yhat: np.ndarray, subset: SubsetMask | None = None):
        yhat = np.asarray(yhat, dtype=np.float64)
        if yhat.ndim != 2:
            raise ShapeMismatchError(f"forecast must be (V, Q), got {yhat.shape}")
        if not np.isfinite(yhat).all():
            raise ValueError("forecast contains non-finite values")
        self.yhat = yhat
        self.subset = subset


def oracle_forecast(model: ForecastModel, instance: Instance,
                    subset: SubsetMask) -> ForecastMatrix:
    """Predict from the full-variable input, then keep only the subset rows."""
    if instance.v != subset.n_total:
        raise ShapeMismatchError(
            f"instance has {instance.v} variables, subset expects "
            f"{subset.n_total}")
    yhat = np.asarray(model.predict(instance.x))
    if yhat.shape != (instance.v, instance.q):
        raise ShapeMismatchError(
            f"model returned {yhat.shape}, expected {(instance.v, instance.q)}")
    return ForecastMatrix(yhat[subset.indices], subset)


def partial_forecast(model: ForecastModel, instance: Instance,
                     subset: SubsetMask) -> ForecastMatrix:
    """Drop the unobserved variables from the input, then predict."""
    if instance.v != subset.n_total:
        raise ShapeMismatchError(
            f"instance has {instance.v} variables, subset expects "
            f"{subset.n_total}")
    x_sub = instance.x[:, subset.indices, :]
    yhat = np.asarray(model.predict(x_sub))
    if yhat.shape != (subset.size, instance.q):
        raise ShapeMismatchError(
            f"model returned {yhat.shape}, expected {(subset.size, instance.q)}")
    return ForecastMatrix(yhat, subset)
