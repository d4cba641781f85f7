"""Command-line entry point.

Subcommands: ingest (dataset statistics), eval (the repeated-subset
protocol), sweep (hyperparameter grids), cluster (correlation clustering
report). Configuration comes from a JSON file (--config, or the
VSF_CONFIG environment variable) overridden by flags; flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace

from .config import RunConfig, load_config
from .dataset import (
    SplitSpec,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    make_windows,
    scale_values,
    split_chronological,
)
from .errors import ConfigError, VSFError
from .evaluation import ExperimentSettings, run_experiment
from .forecast import make_model
from .reporting import format_report
from .retrieval import RetrievalCorpus
from .subset import correlation_distance, dbscan_clusters, spearman_matrix


def _add_common_flags(sub):
    sub.add_argument("--config", help="JSON config file (fallback: VSF_CONFIG)")
    sub.add_argument("--data", help="dataset CSV path (overrides config)")
    sub.add_argument("--scale", type=float, help="value scale factor")
    sub.add_argument("--no-header", action="store_true",
                     help="dataset CSV has no header row")
    sub.add_argument("--seed", type=int, help="base subset seed")
    sub.add_argument("--output", help="write the report here (default stdout)")
    sub.add_argument("--format", choices=("json", "csv", "text"),
                     help="report format")
    sub.add_argument("--parallelism", type=int,
                     default=os.cpu_count() or 1,
                     help="worker processes for the draw loop")
    sub.add_argument("--print-config", action="store_true",
                     help="print the effective config and exit")


def _add_eval_flags(sub):
    sub.add_argument("--model",
                     choices=("persistence", "mean", "linear_ar",
                              "coupled_linear"))
    sub.add_argument("--ridge-lambda", type=float)
    sub.add_argument("--subset-mode", choices=("random", "correlated"))
    sub.add_argument("--k", type=float, help="subset size percent")
    sub.add_argument("--draws", type=int, help="number of subset draws")
    sub.add_argument("--c", type=int, help="clusters per correlated draw")
    sub.add_argument("--eps", type=float, help="clustering radius")
    sub.add_argument("--min-pts", type=int, help="clustering core threshold")
    sub.add_argument("--scheme", choices=("UW", "DDW", "FDW"))
    sub.add_argument("--tau", type=float, help="softmax temperature")
    sub.add_argument("--m", type=int, help="neighbors per ensemble")
    sub.add_argument("--exponent-b", type=float, help="distance exponent")
    sub.add_argument("--retrieval", choices=("direct", "scalable"),
                     help="retrieval engine")
    sub.add_argument("--retrieval-fraction", type=float,
                     help="prefix fraction of training windows to search")
    sub.add_argument("--no-ensemble", action="store_true",
                     help="evaluate only the partial and oracle settings")
    sub.add_argument("--k-hat", type=int, help="calibration neighbor rank")
    sub.add_argument("--u", type=float, help="threshold loosening factor")
    sub.add_argument("--max-rounds", type=int, help="range query round budget")
    sub.add_argument("--horizon-step", type=int,
                     help="1-based step to report (default: last)")
    sub.add_argument("--verify-direct", action="store_true",
                     help="report how often scalable retrieval matches direct")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsf",
        description="Forecast evaluation when only a subset of the trained "
                    "variables is observed at inference time.")
    subs = parser.add_subparsers(dest="command", required=True)

    ingest = subs.add_parser("ingest", help="load a dataset, print statistics")
    _add_common_flags(ingest)
    ingest.add_argument("--p", type=int, help="input window length")
    ingest.add_argument("--q", type=int, help="forecast horizon length")
    ingest.add_argument("--stride", type=int, help="window stride")
    ingest.set_defaults(func=cmd_ingest)

    ev = subs.add_parser("eval", help="run the repeated-subset evaluation")
    _add_common_flags(ev)
    _add_eval_flags(ev)
    ev.set_defaults(func=cmd_eval)

    sweep = subs.add_parser("sweep", help="grid over b, tau, and m")
    _add_common_flags(sweep)
    _add_eval_flags(sweep)
    sweep.add_argument("--sweep-b", help="comma list of distance exponents")
    sweep.add_argument("--sweep-tau", help="comma list of temperatures")
    sweep.add_argument("--sweep-m", help="comma list of neighbor counts")
    sweep.set_defaults(func=cmd_sweep)

    cluster = subs.add_parser("cluster",
                              help="correlation clustering report")
    _add_common_flags(cluster)
    cluster.add_argument("--eps", type=float, help="clustering radius")
    cluster.add_argument("--min-pts", type=int,
                         help="clustering core threshold")
    cluster.add_argument("--split", choices=("train", "val", "test", "full"),
                         default="train", help="series slice to cluster")
    cluster.add_argument("--emit-labels",
                         help="also write a per-variable label CSV here")
    cluster.set_defaults(func=cmd_cluster)
    return parser


def _effective_config(args) -> RunConfig:
    path = args.config or os.environ.get("VSF_CONFIG")
    cfg = load_config(path) if path else RunConfig()
    if args.data:
        cfg.dataset.path = args.data
    if args.scale is not None:
        cfg.dataset.scale = args.scale
    if args.no_header:
        cfg.dataset.has_header = False
    if args.seed is not None:
        cfg.subset.seed = args.seed
    if args.output:
        cfg.output.path = args.output
    if args.format:
        cfg.output.format = args.format
    if getattr(args, "p", None) is not None:
        cfg.windowing.p = args.p
    if getattr(args, "q", None) is not None:
        cfg.windowing.q = args.q
    if getattr(args, "stride", None) is not None:
        cfg.windowing.stride = args.stride
    if getattr(args, "model", None):
        cfg.model.name = args.model
    if getattr(args, "ridge_lambda", None) is not None:
        cfg.model.params["ridge_lambda"] = args.ridge_lambda
    if getattr(args, "subset_mode", None):
        cfg.subset.mode = args.subset_mode
    if getattr(args, "k", None) is not None:
        cfg.subset.k_percent = args.k
    if getattr(args, "draws", None) is not None:
        cfg.subset.draws = args.draws
    if getattr(args, "c", None) is not None:
        cfg.subset.c = args.c
    if getattr(args, "eps", None) is not None:
        cfg.subset.eps = args.eps
    if getattr(args, "min_pts", None) is not None:
        cfg.subset.min_pts = args.min_pts
    if getattr(args, "scheme", None):
        cfg.ensemble.scheme = args.scheme
    if getattr(args, "tau", None) is not None:
        cfg.ensemble.tau = args.tau
    if getattr(args, "no_ensemble", False):
        cfg.ensemble.enabled = False
    if getattr(args, "m", None) is not None:
        cfg.retrieval.m = args.m
    if getattr(args, "exponent_b", None) is not None:
        cfg.retrieval.exponent_b = args.exponent_b
    if getattr(args, "retrieval", None):
        cfg.retrieval.engine = args.retrieval
    if getattr(args, "retrieval_fraction", None) is not None:
        cfg.retrieval.fraction = args.retrieval_fraction
    if getattr(args, "k_hat", None) is not None:
        cfg.index.k_hat = args.k_hat
    if getattr(args, "u", None) is not None:
        cfg.index.u = args.u
    if getattr(args, "max_rounds", None) is not None:
        cfg.index.max_rounds = args.max_rounds
    if getattr(args, "horizon_step", None) is not None:
        cfg.horizon_step = args.horizon_step
    return cfg.validate()


@dataclass
class Pipeline:
    """Loaded, normalized, windowed dataset plus a fitted model."""

    cfg: RunConfig
    n_vars: int
    t_rows: int
    split_rows: dict
    normalizer: object
    train_series: object
    train_windows: list
    val_windows: list
    test_windows: list
    corpus: RetrievalCorpus
    model: object


def _build_pipeline(cfg: RunConfig, fit: bool = True) -> Pipeline:
    series = load_csv(cfg.dataset.path, has_header=cfg.dataset.has_header)
    if cfg.dataset.scale != 1.0:
        series = scale_values(series, cfg.dataset.scale)
    spec = SplitSpec(cfg.split.train, cfg.split.val, cfg.split.test)
    p, q, stride = cfg.windowing.p, cfg.windowing.q, cfg.windowing.stride
    train, val, test = split_chronological(series, spec, p=p, q=q)
    norm = fit_normalizer(train)
    train_n = apply_normalizer(train, norm)
    val_n = apply_normalizer(val, norm)
    test_n = apply_normalizer(test, norm)
    train_windows = make_windows(train_n, p, q, stride)
    val_windows = make_windows(val_n, p, q, stride)
    test_windows = make_windows(test_n, p, q, stride)
    corpus = RetrievalCorpus.from_windows(train_windows,
                                          cfg.retrieval.fraction)
    model = make_model(cfg.model.name, **cfg.model.params)
    if fit:
        model.fit(train_windows)
    split_rows = {"train": train.t, "val": val.t, "test": test.t}
    return Pipeline(cfg=cfg, n_vars=series.n, t_rows=series.t,
                    split_rows=split_rows, normalizer=norm,
                    train_series=train_n,
                    train_windows=train_windows, val_windows=val_windows,
                    test_windows=test_windows, corpus=corpus, model=model)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _maybe_print_config(args, cfg: RunConfig) -> bool:
    if args.print_config:
        sys.stdout.write(json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
                         + "\n")
        return True
    return False


def _settings_from(cfg: RunConfig, parallelism: int,
                   verify_direct: bool = False) -> ExperimentSettings:
    targets = (("partial", "oracle", "ensemble") if cfg.ensemble.enabled
               else ("partial", "oracle"))
    return ExperimentSettings(
        draws=cfg.subset.draws, k_percent=cfg.subset.k_percent,
        subset_mode=cfg.subset.mode, clusters_c=cfg.subset.c,
        dbscan_eps=cfg.subset.eps, dbscan_min_pts=cfg.subset.min_pts,
        base_seed=cfg.subset.seed, horizon_step=cfg.horizon_step,
        targets=targets, scheme=cfg.ensemble.scheme, tau=cfg.ensemble.tau,
        m=cfg.retrieval.m, exponent_b=cfg.retrieval.exponent_b,
        engine=cfg.retrieval.engine, k_hat=cfg.index.k_hat,
        loosen_factor=cfg.index.u, max_rounds=cfg.index.max_rounds,
        parallelism=parallelism, verify_direct=verify_direct)


def cmd_ingest(args) -> int:
    cfg = _effective_config(args)
    if _maybe_print_config(args, cfg):
        return 0
    pipe = _build_pipeline(cfg, fit=False)
    stats = {
        "t": pipe.t_rows,
        "n": pipe.n_vars,
        "p": cfg.windowing.p,
        "q": cfg.windowing.q,
        "stride": cfg.windowing.stride,
        "scale": cfg.dataset.scale,
        "splits": {
            "train": {"rows": pipe.split_rows["train"],
                      "windows": len(pipe.train_windows)},
            "val": {"rows": pipe.split_rows["val"],
                    "windows": len(pipe.val_windows)},
            "test": {"rows": pipe.split_rows["test"],
                     "windows": len(pipe.test_windows)},
        },
    }
    _emit(json.dumps(stats, indent=2, sort_keys=True) + "\n",
          cfg.output.path)
    return 0


def cmd_eval(args) -> int:
    cfg = _effective_config(args)
    if _maybe_print_config(args, cfg):
        return 0
    if args.verify_direct and cfg.retrieval.engine != "scalable":
        raise ConfigError("--verify-direct requires --retrieval scalable")
    pipe = _build_pipeline(cfg)
    settings = _settings_from(cfg, args.parallelism,
                              verify_direct=args.verify_direct)
    report = run_experiment(pipe.model, pipe.corpus, pipe.test_windows,
                            settings, train_series=pipe.train_series,
                            val_windows=pipe.val_windows,
                            normalizer=pipe.normalizer)
    _emit(format_report(report, cfg.output.format), cfg.output.path)
    return 0


def _parse_grid(text: str | None, cast, fallback):
    if not text:
        return [fallback]
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep list {text!r}: {exc}")


def cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    if _maybe_print_config(args, cfg):
        return 0
    if not (args.sweep_b or args.sweep_tau or args.sweep_m):
        raise ConfigError("sweep needs at least one of --sweep-b, "
                          "--sweep-tau, --sweep-m")
    grid_b = _parse_grid(args.sweep_b, float, cfg.retrieval.exponent_b)
    grid_tau = _parse_grid(args.sweep_tau, float, cfg.ensemble.tau)
    grid_m = _parse_grid(args.sweep_m, int, cfg.retrieval.m)
    pipe = _build_pipeline(cfg)
    base = _settings_from(cfg, args.parallelism)
    # oracle and partial do not depend on the swept knobs; run them once
    baseline = run_experiment(
        pipe.model, pipe.corpus, pipe.test_windows,
        replace(base, targets=("partial", "oracle")),
        train_series=pipe.train_series, val_windows=pipe.val_windows,
        normalizer=pipe.normalizer)
    oracle = baseline.aggregate["oracle"]
    rows = []
    for b in grid_b:
        for tau in grid_tau:
            for m in grid_m:
                cell = replace(base, targets=("ensemble",),
                                exponent_b=b, tau=tau, m=m)
                rep = run_experiment(
                    pipe.model, pipe.corpus, pipe.test_windows, cell,
                    train_series=pipe.train_series,
                    val_windows=pipe.val_windows,
                    normalizer=pipe.normalizer)
                agg = rep.aggregate["ensemble"]
                rows.append({
                    "exponent_b": b, "tau": tau, "m": m,
                    "mae": agg["mae_mean"], "rmse": agg["rmse_mean"],
                    "delta_mae": (agg["mae_mean"] - oracle["mae_mean"])
                    / oracle["mae_mean"] * 100.0,
                    "delta_rmse": (agg["rmse_mean"] - oracle["rmse_mean"])
                    / oracle["rmse_mean"] * 100.0,
                })
    payload = {"oracle": oracle, "partial": baseline.aggregate["partial"],
               "scheme": cfg.ensemble.scheme, "cells": rows}
    if cfg.output.format == "csv":
        lines = ["exponent_b,tau,m,mae,rmse,delta_mae,delta_rmse"]
        for r in rows:
            lines.append(f"{r['exponent_b']},{r['tau']},{r['m']},"
                         f"{r['mae']!r},{r['rmse']!r},"
                         f"{r['delta_mae']!r},{r['delta_rmse']!r}")
        text = "\n".join(lines) + "\n"
    elif cfg.output.format == "text":
        lines = [f"{'b':>8} {'tau':>8} {'m':>4} {'mae':>12} {'rmse':>12} "
                 f"{'d_mae%':>10} {'d_rmse%':>10}"]
        for r in rows:
            lines.append(f"{r['exponent_b']:>8} {r['tau']:>8} {r['m']:>4} "
                         f"{r['mae']:>12.6f} {r['rmse']:>12.6f} "
                         f"{r['delta_mae']:>10.4f} {r['delta_rmse']:>10.4f}")
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _emit(text, cfg.output.path)
    return 0


def cmd_cluster(args) -> int:
    cfg = _effective_config(args)
    if args.eps is not None:
        cfg.subset.eps = args.eps
    if args.min_pts is not None:
        cfg.subset.min_pts = args.min_pts
    if _maybe_print_config(args, cfg):
        return 0
    series = load_csv(cfg.dataset.path, has_header=cfg.dataset.has_header)
    if cfg.dataset.scale != 1.0:
        series = scale_values(series, cfg.dataset.scale)
    if args.split != "full":
        spec = SplitSpec(cfg.split.train, cfg.split.val, cfg.split.test)
        train, val, test = split_chronological(series, spec)
        series = {"train": train, "val": val, "test": test}[args.split]
    rho = spearman_matrix(series)
    clusters = dbscan_clusters(correlation_distance(rho),
                               cfg.subset.eps, cfg.subset.min_pts)
    payload = {
        "n_clusters": clusters.n_clusters,
        "sizes": clusters.sizes(),
        "labels": clusters.labels.tolist(),
        "eps": cfg.subset.eps,
        "min_pts": cfg.subset.min_pts,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n",
          cfg.output.path)
    if args.emit_labels:
        with open(args.emit_labels, "w", encoding="utf-8") as fh:
            fh.write("variable,label\n")
            for name, label in zip(series.variable_names, clusters.labels):
                fh.write(f"{name},{label}\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (VSFError, ValueError, OSError) as exc:
        message = " ".join(str(exc).split()) or exc.__class__.__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
