"""Weighted combination of neighbor-spliced forecasts.

Three weighting schemes are supported. UW averages the member forecasts.
DDW softmaxes the negated retrieval distances. FDW runs the forecast model
on both the spliced input and the bare neighbor, measures the discrepancy
of the two forecasts on the observed rows (discounting later horizon steps
by their index), and softmaxes the negated discrepancies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .forecast import ForecastMatrix, ForecastModel
from .retrieval import NeighborSet, RetrievalCorpus, splice_instance
from .subset import SubsetMask

SCHEMES = ("UW", "DDW", "FDW")


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights on the probability simplex."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d array")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return int(self.w.size)


@dataclass(frozen=True)
class EnsembleConfig:
    scheme: str = "FDW"
    tau: float = 0.1
    m: int = 5
    exponent_b: float = 0.5

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.exponent_b <= 0:
            raise ValueError(f"exponent must be positive, got {self.exponent_b}")


def uniform_weights(m: int) -> WeightVector:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return WeightVector(np.full(m, 1.0 / m))


def _softmax_negated(values: np.ndarray, tau: float) -> WeightVector:
    # max-subtraction keeps the exponentials in range
    z = -np.asarray(values, dtype=np.float64) / tau
    z = z - z.max()
    e = np.exp(z)
    return WeightVector(e / e.sum())


def ddw_weights(distances, tau: float) -> WeightVector:
    """Softmax of the negated retrieval distances at temperature tau."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    distances = np.asarray(distances, dtype=np.float64)
    if not np.isfinite(distances).all():
        raise ValueError("distances must be finite")
    return _softmax_negated(distances, tau)


def fdw_weights(forecast_distances, tau: float) -> WeightVector:
    """Softmax of the negated forecast discrepancies at temperature tau."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    forecast_distances = np.asarray(forecast_distances, dtype=np.float64)
    if not np.isfinite(forecast_distances).all():
        raise ValueError("forecast distances must be finite")
    return _softmax_negated(forecast_distances, tau)


def _subset_rows(matrix, subset: SubsetMask) -> np.ndarray:
    yhat = matrix.yhat if isinstance(matrix, ForecastMatrix) else np.asarray(
        matrix, dtype=np.float64)
    if yhat.ndim != 2:
        raise ShapeMismatchError(f"forecast must be 2-d, got shape {yhat.shape}")
    if yhat.shape[0] == subset.size:
        return yhat
    if yhat.shape[0] == subset.n_total:
        return yhat[subset.indices]
    raise ShapeMismatchError(
        f"forecast has {yhat.shape[0]} rows, expected {subset.size} "
        f"or {subset.n_total}")


def forecast_distance(y_new, y_nn, subset: SubsetMask, q_len: int) -> float:
    """Mean over the observed rows of |step difference| / step index.

    Horizon steps are indexed 1..Q so the normalizing division is defined
    at the first step and later steps are progressively discounted.
    """
    a = _subset_rows(y_new, subset)
    b = _subset_rows(y_nn, subset)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"forecast shapes differ: {a.shape} vs {b.shape}")
    if a.shape[1] != q_len:
        raise ShapeMismatchError(
            f"forecast has {a.shape[1]} steps, expected {q_len}")
    steps = np.arange(1, q_len + 1, dtype=np.float64)
    return float(np.mean(np.abs(a - b) / steps[np.newaxis, :]))


def ensemble_members(model: ForecastModel, x_test: np.ndarray,
                     subset: SubsetMask, neighbors: NeighborSet,
                     corpus: RetrievalCorpus,
                     need_neighbor_forecasts: bool = True,
                     neighbor_cache: dict | None = None):
    """Spliced member forecasts and, when requested, the matching bare
    neighbor forecasts (memoized per corpus id across calls)."""
    spliced = []
    bare = []
    for idx in neighbors.corpus_indices:
        x_nn = corpus.instances[int(idx)].x
        x_new = splice_instance(x_test, x_nn, subset)
        spliced.append(np.asarray(model.predict(x_new), dtype=np.float64))
        if need_neighbor_forecasts:
            if neighbor_cache is not None and int(idx) in neighbor_cache:
                y_nn = neighbor_cache[int(idx)]
            else:
                y_nn = np.asarray(model.predict(x_nn), dtype=np.float64)
                if neighbor_cache is not None:
                    neighbor_cache[int(idx)] = y_nn
            bare.append(y_nn)
    return spliced, bare


def member_weights(scheme: str, neighbors: NeighborSet, spliced, bare,
                   subset: SubsetMask, tau: float) -> WeightVector:
    count = len(neighbors)
    if scheme == "UW":
        return uniform_weights(count)
    if scheme == "DDW":
        return ddw_weights(neighbors.distances, tau)
    if scheme == "FDW":
        q_len = spliced[0].shape[1]
        dists = [forecast_distance(y_new, y_nn, subset, q_len)
                 for y_new, y_nn in zip(spliced, bare)]
        return fdw_weights(np.asarray(dists), tau)
    raise ValueError(f"unknown scheme {scheme!r}")


def ensemble_forecast(model: ForecastModel, x_test: np.ndarray,
                      subset: SubsetMask, neighbors: NeighborSet,
                      corpus: RetrievalCorpus, cfg: EnsembleConfig,
                      neighbor_cache: dict | None = None) -> ForecastMatrix:
    """Weighted sum of the spliced forecasts, restricted to the subset rows.

    Fewer than cfg.m neighbors are accepted (a loosened range query may
    come up short); more are not.
    """
    if len(neighbors) > cfg.m:
        raise ValueError(
            f"got {len(neighbors)} neighbors, expected at most m={cfg.m}")
    if len(neighbors) == 0:
        raise ValueError("ensemble needs at least one neighbor")
    spliced, bare = ensemble_members(
        model, x_test, subset, neighbors, corpus,
        need_neighbor_forecasts=cfg.scheme == "FDW",
        neighbor_cache=neighbor_cache)
    weights = member_weights(cfg.scheme, neighbors, spliced, bare, subset,
                             cfg.tau)
    combined = np.zeros_like(spliced[0])
    for w, y_new in zip(weights.w, spliced):
        combined += w * y_new
    return ForecastMatrix(_subset_rows(combined, subset), subset)
