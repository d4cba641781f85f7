"""Metrics, rank diagnostics, the repeated-subset protocol, and reports.

A run draws R variable subsets, evaluates the partial / oracle / ensemble
settings over the full test window set at a single horizon step (the last
one by default), and aggregates means and population standard deviations
across draws. Error deltas are percentage excesses over the oracle errors
computed from the aggregated means.
"""

from __future__ import annotations

import concurrent.futures
import multiprocessing
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import Instance, Normalizer, RawSeries
from .ensemble import (
    EnsembleConfig,
    ensemble_forecast,
    ensemble_members,
    member_weights,
)
from .errors import (
    CorpusTooSmallError,
    ShapeMismatchError,
    UnsupportedSchemeError,
    ZeroOracleError,
)
from .forecast import ForecastModel, oracle_forecast, partial_forecast
from .retrieval import RetrievalCorpus, mask_columns, top_m_neighbors, _project
from .scalable_index import (
    QueryTable,
    ThresholdVector,
    build_query_table,
    calibrate_thresholds,
    iterative_retrieve,
)
from .subset import (
    ClusterAssignment,
    SubsetMask,
    correlation_distance,
    dbscan_clusters,
    sample_correlated_subset,
    sample_random_subset,
    spearman_matrix,
)


def _as_matrix_pair(yhat, y):
    yhat = np.asarray(yhat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if yhat.ndim != 2 or yhat.shape != y.shape:
        raise ShapeMismatchError(
            f"matrices must share a 2-d shape, got {yhat.shape} vs {y.shape}")
    return yhat, y


def mae(yhat, y, step_j: int) -> float:
    """Mean absolute error over the variable rows at horizon step j (1-based)."""
    yhat, y = _as_matrix_pair(yhat, y)
    if not 1 <= step_j <= yhat.shape[1]:
        raise ValueError(f"step_j must be in [1, {yhat.shape[1]}], got {step_j}")
    return float(np.abs(yhat[:, step_j - 1] - y[:, step_j - 1]).mean())


def rmse(yhat, y, step_j: int) -> float:
    """Root mean squared error over the variable rows at horizon step j."""
    yhat, y = _as_matrix_pair(yhat, y)
    if not 1 <= step_j <= yhat.shape[1]:
        raise ValueError(f"step_j must be in [1, {yhat.shape[1]}], got {step_j}")
    diff = yhat[:, step_j - 1] - y[:, step_j - 1]
    return float(np.sqrt((diff * diff).mean()))


def delta_vs_oracle(e_case: float, e_oracle: float) -> float:
    """Percentage excess of an error over the oracle error."""
    if e_oracle <= 0:
        raise ZeroOracleError(f"oracle error must be positive, got {e_oracle}")
    return (e_case - e_oracle) / e_oracle * 100.0


@dataclass(frozen=True)
class RankRecord:
    optimal_rank: int
    reciprocal: float

    def __post_init__(self):
        if self.optimal_rank < 1:
            raise ValueError("rank must be at least 1")
        if abs(self.reciprocal - 1.0 / self.optimal_rank) > 1e-12:
            raise ValueError("reciprocal does not match the rank")


def optimal_neighbor_rank(corpus: RetrievalCorpus, window: Instance,
                          subset: SubsetMask,
                          exponent_b: float = 0.5) -> RankRecord:
    """Rank of the full-variable nearest neighbor in the subset ordering.

    Ties are broken by ascending corpus index in both orderings.
    """
    if corpus.count < 2:
        raise CorpusTooSmallError("rank analysis needs at least 2 instances")
    table = corpus.flat_table()
    all_cols = np.arange(table.shape[1], dtype=np.int64)
    full_query = np.ascontiguousarray(window.x.reshape(-1))
    full_d = kernels.scan_distances(table, all_cols, full_query,
                                    float(exponent_b))
    optimal = int(np.argmin(full_d))  # first index on ties
    sub_cols = mask_columns(subset, corpus.p, corpus.n, corpus.d)
    sub_query = np.ascontiguousarray(
        _project(window.x, subset).reshape(-1))
    sub_d = kernels.scan_distances(table, sub_cols, sub_query,
                                   float(exponent_b))
    order = np.argsort(sub_d, kind="stable")
    rank = int(np.nonzero(order == optimal)[0][0]) + 1
    return RankRecord(optimal_rank=rank, reciprocal=1.0 / rank)


def ideal_neighbor_mrr(model: ForecastModel, corpus: RetrievalCorpus,
                       test_windows: list[Instance],
                       subsets: list[SubsetMask], scheme: str,
                       m: int = 5, tau: float = 0.1,
                       exponent_b: float = 0.5) -> float:
    """Mean reciprocal rank of the least-error member under one scheme."""
    if scheme == "UW":
        raise UnsupportedSchemeError(
            "uniform weights induce no ranking of the neighbors")
    result = weighting_mrr(model, corpus, test_windows, subsets,
                           schemes=(scheme,), m=m, tau=tau,
                           exponent_b=exponent_b)
    return result[scheme]


def weighting_mrr(model: ForecastModel, corpus: RetrievalCorpus,
                  test_windows: list[Instance],
                  subsets: list[SubsetMask],
                  schemes: tuple[str, ...] = ("DDW", "FDW"),
                  m: int = 5, tau: float = 0.1,
                  exponent_b: float = 0.5) -> dict[str, float]:
    """MRR of the ideal member for several schemes over shared retrievals.

    The ideal member of a window is the spliced forecast with the least
    mean absolute error against the ground truth over all observed rows
    and horizon steps; each scheme ranks members by descending weight.
    """
    for scheme in schemes:
        if scheme == "UW":
            raise UnsupportedSchemeError(
                "uniform weights induce no ranking of the neighbors")
    need_bare = "FDW" in schemes
    cache: dict = {}
    totals = {scheme: 0.0 for scheme in schemes}
    count = 0
    for subset in subsets:
        for window in test_windows:
            x_sub = window.x[:, subset.indices, :]
            neighbors = top_m_neighbors(corpus, x_sub, subset,
                                        exponent_b=exponent_b, m=m)
            spliced, bare = ensemble_members(
                model, x_sub, subset, neighbors, corpus,
                need_neighbor_forecasts=need_bare, neighbor_cache=cache)
            truth = window.y.T[subset.indices]
            errors = np.array([
                np.abs(member[subset.indices] - truth).mean()
                for member in spliced])
            ideal = int(np.argmin(errors))
            for scheme in schemes:
                weights = member_weights(scheme, neighbors, spliced, bare,
                                         subset, tau)
                order = np.argsort(-weights.w, kind="stable")
                rank = int(np.nonzero(order == ideal)[0][0]) + 1
                totals[scheme] += 1.0 / rank
            count += 1
    return {scheme: totals[scheme] / count for scheme in schemes}


@dataclass(frozen=True)
class ExperimentSettings:
    """Everything the repeated-subset runner needs besides the data."""

    draws: int = 100
    k_percent: float = 15.0
    subset_mode: str = "random"          # random | correlated
    clusters_c: int = 1
    dbscan_eps: float = 0.3
    dbscan_min_pts: int = 2
    base_seed: int = 0
    horizon_step: int | None = None      # default: the last step
    targets: tuple[str, ...] = ("partial", "oracle", "ensemble")
    scheme: str = "FDW"
    tau: float = 0.1
    m: int = 5
    exponent_b: float = 0.5
    engine: str = "direct"               # direct | scalable
    k_hat: int = 5
    loosen_factor: float = 1.5
    max_rounds: int = 10
    parallelism: int = 1
    verify_direct: bool = False

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError(f"draws must be >= 1, got {self.draws}")
        if not 0.0 < self.k_percent <= 100.0:
            raise ValueError(
                f"k_percent must be in (0, 100], got {self.k_percent}")
        if self.subset_mode not in ("random", "correlated"):
            raise ValueError(f"unknown subset mode {self.subset_mode!r}")
        if self.engine not in ("direct", "scalable"):
            raise ValueError(f"unknown retrieval engine {self.engine!r}")
        unknown = set(self.targets) - {"partial", "oracle", "ensemble"}
        if unknown:
            raise ValueError(f"unknown evaluation targets {sorted(unknown)}")


@dataclass(frozen=True)
class RunResult:
    seed: int
    setting: str
    scheme: str
    mae: float
    rmse: float
    horizon_step: int


@dataclass
class EvalReport:
    per_run: list[RunResult]
    aggregate: dict
    deltas: dict
    per_step: dict
    meta: dict

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "aggregate": self.aggregate,
            "deltas": self.deltas,
            "per_step": self.per_step,
            "per_run": [
                {"seed": r.seed, "setting": r.setting, "scheme": r.scheme,
                 "mae": r.mae, "rmse": r.rmse,
                 "horizon_step": r.horizon_step}
                for r in self.per_run],
        }


def _subset_size(n_vars: int, k_percent: float) -> int:
    return max(1, int(np.floor(n_vars * k_percent / 100.0 + 0.5)))


def _draw_subset(settings: ExperimentSettings, n_vars: int,
                 clusters: ClusterAssignment | None, seed: int) -> SubsetMask:
    if settings.subset_mode == "correlated":
        if clusters is None:
            raise ValueError("correlated mode needs a cluster assignment")
        return sample_correlated_subset(
            clusters, settings.clusters_c,
            _subset_size(n_vars, settings.k_percent), seed)
    if settings.k_percent >= 100.0:
        return SubsetMask.full(n_vars)
    return sample_random_subset(n_vars, settings.k_percent, seed)


@dataclass
class _DrawContext:
    model: ForecastModel
    corpus: RetrievalCorpus
    test_windows: list[Instance]
    settings: ExperimentSettings
    step_j: int
    clusters: ClusterAssignment | None
    table: QueryTable | None
    thresholds: ThresholdVector | None
    normalizer: Normalizer | None


def _denorm(values: np.ndarray, normalizer: Normalizer | None) -> np.ndarray:
    if normalizer is None:
        return values
    return values * normalizer.sigma + normalizer.mu


def _evaluate_draw(ctx: _DrawContext, seed: int) -> dict:
    settings = ctx.settings
    subset = _draw_subset(settings, ctx.corpus.n, ctx.clusters, seed)
    q_len = ctx.test_windows[0].q
    sums = {t: {"mae": np.zeros(q_len), "rmse": np.zeros(q_len)}
            for t in settings.targets}
    match_hits = 0
    cfg = EnsembleConfig(scheme=settings.scheme, tau=settings.tau,
                         m=settings.m, exponent_b=settings.exponent_b)
    cache: dict = {}
    for window in ctx.test_windows:
        truth = _denorm(window.y.T[subset.indices], ctx.normalizer)
        outputs = {}
        if "partial" in sums:
            outputs["partial"] = partial_forecast(
                ctx.model, window, subset).yhat
        if "oracle" in sums:
            outputs["oracle"] = oracle_forecast(
                ctx.model, window, subset).yhat
        if "ensemble" in sums:
            x_sub = window.x[:, subset.indices, :]
            if settings.engine == "scalable":
                neighbors = iterative_retrieve(
                    ctx.table, ctx.corpus, x_sub, subset, ctx.thresholds,
                    u=settings.loosen_factor, m=settings.m,
                    max_rounds=settings.max_rounds,
                    exponent_b=settings.exponent_b)
                if settings.verify_direct:
                    direct = top_m_neighbors(
                        ctx.corpus, x_sub, subset,
                        exponent_b=settings.exponent_b, m=settings.m)
                    if (len(neighbors) == len(direct)
                            and set(neighbors.corpus_indices.tolist())
                            == set(direct.corpus_indices.tolist())):
                        match_hits += 1
            else:
                neighbors = top_m_neighbors(
                    ctx.corpus, x_sub, subset,
                    exponent_b=settings.exponent_b, m=settings.m)
            outputs["ensemble"] = ensemble_forecast(
                ctx.model, x_sub, subset, neighbors, ctx.corpus, cfg,
                neighbor_cache=cache).yhat
        for target, yhat in outputs.items():
            yhat = _denorm(yhat, ctx.normalizer)
            diff = yhat - truth
            sums[target]["mae"] += np.abs(diff).mean(axis=0)
            sums[target]["rmse"] += np.sqrt((diff * diff).mean(axis=0))
    n_windows = len(ctx.test_windows)
    metrics = {}
    for target, acc in sums.items():
        mae_steps = acc["mae"] / n_windows
        rmse_steps = acc["rmse"] / n_windows
        metrics[target] = {
            "mae": float(mae_steps[ctx.step_j - 1]),
            "rmse": float(rmse_steps[ctx.step_j - 1]),
            "mae_steps": mae_steps,
            "rmse_steps": rmse_steps,
        }
    return {"seed": seed, "metrics": metrics, "match_hits": match_hits,
            "n_queries": n_windows if settings.verify_direct else 0}


_POOL_CTX: _DrawContext | None = None


def _pool_init(ctx: _DrawContext) -> None:
    global _POOL_CTX
    _POOL_CTX = ctx


def _pool_draw(seed: int) -> dict:
    return _evaluate_draw(_POOL_CTX, seed)


def run_experiment(model: ForecastModel, corpus: RetrievalCorpus,
                   test_windows: list[Instance],
                   settings: ExperimentSettings,
                   train_series: RawSeries | None = None,
                   val_windows: list[Instance] | None = None,
                   normalizer: Normalizer | None = None) -> EvalReport:
    """Run the repeated-subset protocol and assemble the report.

    ``train_series`` is required for correlated subset sampling (the
    clustering is computed from it); ``val_windows`` are required for the
    scalable retrieval engine (threshold calibration). When a normalizer
    is given, errors are reported in the original units.
    """
    if not test_windows:
        raise ValueError("no test windows to evaluate")
    q_len = test_windows[0].q
    step_j = settings.horizon_step if settings.horizon_step else q_len
    if not 1 <= step_j <= q_len:
        raise ValueError(f"horizon_step must be in [1, {q_len}], got {step_j}")

    clusters = None
    if settings.subset_mode == "correlated":
        if train_series is None:
            raise ValueError("correlated mode needs the training series")
        rho = spearman_matrix(train_series)
        clusters = dbscan_clusters(correlation_distance(rho),
                                   settings.dbscan_eps,
                                   settings.dbscan_min_pts)

    table = thresholds = None
    if settings.engine == "scalable" and "ensemble" in settings.targets:
        if not val_windows:
            raise ValueError("scalable engine needs validation windows "
                             "for threshold calibration")
        table = build_query_table(corpus)
        thresholds = calibrate_thresholds(corpus, val_windows,
                                          k_hat=settings.k_hat,
                                          exponent_b=settings.exponent_b)

    ctx = _DrawContext(model=model, corpus=corpus,
                       test_windows=test_windows, settings=settings,
                       step_j=step_j, clusters=clusters, table=table,
                       thresholds=thresholds, normalizer=normalizer)
    seeds = [settings.base_seed + i for i in range(settings.draws)]
    workers = min(settings.parallelism, settings.draws)
    if workers > 1:
        mp = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers, mp_context=mp,
                initializer=_pool_init, initargs=(ctx,)) as pool:
            results = list(pool.map(_pool_draw, seeds))
    else:
        results = [_evaluate_draw(ctx, seed) for seed in seeds]

    per_run = []
    for res in results:
        for target in settings.targets:
            met = res["metrics"][target]
            per_run.append(RunResult(
                seed=res["seed"], setting=target,
                scheme=settings.scheme if target == "ensemble" else "",
                mae=met["mae"], rmse=met["rmse"], horizon_step=step_j))

    aggregate = {}
    per_step = {}
    for target in settings.targets:
        maes = np.array([r["metrics"][target]["mae"] for r in results])
        rmses = np.array([r["metrics"][target]["rmse"] for r in results])
        aggregate[target] = {
            "mae_mean": float(maes.mean()),
            "mae_std": float(maes.std()),
            "rmse_mean": float(rmses.mean()),
            "rmse_std": float(rmses.std()),
        }
        per_step[target] = {
            "mae": np.mean([r["metrics"][target]["mae_steps"]
                            for r in results], axis=0).tolist(),
            "rmse": np.mean([r["metrics"][target]["rmse_steps"]
                             for r in results], axis=0).tolist(),
        }

    deltas = {}
    if "oracle" in aggregate:
        for target in ("partial", "ensemble"):
            if target not in aggregate:
                continue
            deltas[target] = {
                "mae": delta_vs_oracle(aggregate[target]["mae_mean"],
                                       aggregate["oracle"]["mae_mean"]),
                "rmse": delta_vs_oracle(aggregate[target]["rmse_mean"],
                                        aggregate["oracle"]["rmse_mean"]),
            }
            per_step[f"delta_{target}"] = {
                metric: [delta_vs_oracle(c, o) for c, o in zip(
                    per_step[target][metric], per_step["oracle"][metric])]
                for metric in ("mae", "rmse")}

    meta = {
        "draws": settings.draws,
        "k_percent": settings.k_percent,
        "subset_mode": settings.subset_mode,
        "horizon_step": step_j,
        "scheme": settings.scheme,
        "tau": settings.tau,
        "m": settings.m,
        "exponent_b": settings.exponent_b,
        "engine": settings.engine,
        "base_seed": settings.base_seed,
        "targets": list(settings.targets),
        "kernel_backend": kernels.BACKEND,
    }
    if settings.subset_mode == "correlated":
        meta["clusters_c"] = settings.clusters_c
        meta["n_clusters"] = clusters.n_clusters
    if settings.verify_direct:
        total = sum(r["n_queries"] for r in results)
        hits = sum(r["match_hits"] for r in results)
        meta["direct_match_rate"] = hits / total if total else None
    return EvalReport(per_run=per_run, aggregate=aggregate, deltas=deltas,
                      per_step=per_step, meta=meta)
