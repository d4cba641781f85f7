"""Render evaluation reports as JSON, CSV, or aligned plain text."""

from __future__ import annotations

import io
import json

from .evaluation import EvalReport

CSV_HEADER = "seed,setting,scheme,mae,rmse,horizon_step"


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_to_csv(report: EvalReport) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for row in report.per_run:
        out.write(f"{row.seed},{row.setting},{row.scheme},"
                  f"{row.mae!r},{row.rmse!r},{row.horizon_step}\n")
    return out.getvalue()


def report_to_text(report: EvalReport) -> str:
    out = io.StringIO()
    meta = report.meta
    out.write(f"draws={meta['draws']}  k={meta['k_percent']}%  "
              f"mode={meta['subset_mode']}  step={meta['horizon_step']}  "
              f"engine={meta['engine']}\n\n")
    out.write(f"{'setting':<10} {'scheme':<6} {'mae':>12} {'mae_std':>12} "
              f"{'rmse':>12} {'rmse_std':>12}\n")
    for target, agg in report.aggregate.items():
        scheme = meta["scheme"] if target == "ensemble" else "-"
        out.write(f"{target:<10} {scheme:<6} {agg['mae_mean']:>12.6f} "
                  f"{agg['mae_std']:>12.6f} {agg['rmse_mean']:>12.6f} "
                  f"{agg['rmse_std']:>12.6f}\n")
    if report.deltas:
        out.write("\n")
        out.write(f"{'delta vs oracle':<17} {'mae %':>10} {'rmse %':>10}\n")
        for target, d in report.deltas.items():
            out.write(f"{target:<17} {d['mae']:>10.4f} {d['rmse']:>10.4f}\n")
    if "direct_match_rate" in meta and meta["direct_match_rate"] is not None:
        out.write(f"\ndirect match rate: {meta['direct_match_rate']:.4f}\n")
    return out.getvalue()


def format_report(report: EvalReport, fmt: str) -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "csv":
        return report_to_csv(report)
    if fmt == "text":
        return report_to_text(report)
    raise ValueError(f"unknown report format {fmt!r}")
