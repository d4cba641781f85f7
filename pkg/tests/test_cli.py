import json

import numpy as np
import pytest

from vsforecast.cli import main
from vsforecast.config import config_from_dict, load_config
from vsforecast.errors import ConfigError
from vsforecast.synthetic import (
    clustered_factor_series,
    latent_factor_series,
    write_series_csv,
)


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "series.csv"
    series = latent_factor_series(420, n_vars=12,
                                  periods=(20, 30, 40, 60, 120), seed=3)
    write_series_csv(series, path)
    return str(path)


@pytest.fixture(scope="module")
def base_config(tmp_path_factory, data_csv):
    cfg = {
        "dataset": {"path": data_csv},
        "windowing": {"p": 6, "q": 4},
        "subset": {"k_percent": 25.0, "draws": 2, "seed": 0},
        "model": {"name": "linear_ar", "params": {"ridge_lambda": 1.0}},
    }
    path = tmp_path_factory.mktemp("cfg") / "run.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_ingest_reports_stats(data_csv, capsys):
    code = main(["ingest", "--data", data_csv, "--p", "6", "--q", "4",
                 "--parallelism", "1"])
    assert code == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["t"] == 420 and stats["n"] == 12
    assert stats["splits"]["train"]["rows"] == 294
    assert stats["splits"]["train"]["windows"] == 294 - 6 - 4 + 1


def test_ingest_wide_file(tmp_path, capsys):
    rows = [",".join(str((i * 13 + j) % 29) for j in range(207))
            for i in range(120)]
    path = tmp_path / "wide.csv"
    path.write_text("\n".join(rows) + "\n")
    code = main(["ingest", "--data", str(path), "--no-header",
                 "--p", "6", "--q", "4", "--parallelism", "1"])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["n"] == 207


def test_ingest_ragged_file_fails_cleanly(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3\n")
    code = main(["ingest", "--data", str(path), "--no-header",
                 "--parallelism", "1"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.err.startswith("error: ")
    assert len(captured.err.strip().splitlines()) == 1
    assert "row 2" in captured.err


def test_eval_writes_report(base_config, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["eval", "--config", base_config, "--output", str(out),
                 "--parallelism", "1"])
    assert code == 0
    payload = json.loads(out.read_text())
    settings = {row["setting"] for row in payload["per_run"]}
    assert settings == {"partial", "oracle", "ensemble"}
    assert "partial" in payload["deltas"] and "ensemble" in payload["deltas"]
    assert payload["meta"]["scheme"] == "FDW"


def test_eval_reports_are_byte_identical(base_config, tmp_path):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    for out in (out_a, out_b):
        assert main(["eval", "--config", base_config, "--output", str(out),
                     "--parallelism", "1"]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_eval_csv_format(base_config, tmp_path):
    out = tmp_path / "report.csv"
    code = main(["eval", "--config", base_config, "--output", str(out),
                 "--format", "csv", "--parallelism", "1"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "seed,setting,scheme,mae,rmse,horizon_step"
    assert len(lines) == 1 + 2 * 3  # 2 draws x 3 settings


def test_eval_scalable_with_verification(base_config, tmp_path):
    out = tmp_path / "report.json"
    code = main(["eval", "--config", base_config, "--output", str(out),
                 "--retrieval", "scalable", "--verify-direct",
                 "--max-rounds", "30", "--parallelism", "1"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert 0.0 <= payload["meta"]["direct_match_rate"] <= 1.0


def test_eval_verify_direct_requires_scalable(base_config, capsys):
    code = main(["eval", "--config", base_config, "--verify-direct",
                 "--parallelism", "1"])
    assert code == 1
    assert "scalable" in capsys.readouterr().err


def test_eval_rejects_zero_draws(base_config, capsys):
    code = main(["eval", "--config", base_config, "--draws", "0",
                 "--parallelism", "1"])
    assert code == 1
    assert capsys.readouterr().err.startswith("error: ")


def test_print_config_round_trip(base_config, capsys):
    code = main(["eval", "--config", base_config, "--print-config",
                 "--tau", "0.25", "--parallelism", "1"])
    assert code == 0
    echoed = json.loads(capsys.readouterr().out)
    rebuilt = config_from_dict(echoed).validate()
    assert rebuilt.ensemble.tau == 0.25
    assert rebuilt.to_dict() == echoed


def test_flags_override_config(base_config, capsys):
    code = main(["eval", "--config", base_config, "--print-config",
                 "--scheme", "DDW", "--m", "3", "--seed", "42",
                 "--parallelism", "1"])
    assert code == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["ensemble"]["scheme"] == "DDW"
    assert echoed["retrieval"]["m"] == 3
    assert echoed["subset"]["seed"] == 42


def test_config_env_fallback(base_config, monkeypatch, capsys):
    monkeypatch.setenv("VSF_CONFIG", base_config)
    code = main(["eval", "--print-config", "--parallelism", "1"])
    assert code == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["windowing"]["p"] == 6


def test_unknown_config_key_rejected(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dataset": {"path": "x.csv"},
                                "windowinng": {"p": 3}}))
    code = main(["eval", "--config", str(path), "--parallelism", "1"])
    assert code == 1
    assert "windowinng" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_sweep_requires_grid(base_config, capsys):
    code = main(["sweep", "--config", base_config, "--parallelism", "1"])
    assert code == 1
    assert "sweep" in capsys.readouterr().err


def test_sweep_rows(base_config, tmp_path):
    out = tmp_path / "sweep.json"
    code = main(["sweep", "--config", base_config, "--output", str(out),
                 "--sweep-m", "1,2,3,4,5", "--draws", "1",
                 "--parallelism", "1"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert [row["m"] for row in payload["cells"]] == [1, 2, 3, 4, 5]
    assert all("delta_rmse" in row for row in payload["cells"])


def test_sweep_csv(base_config, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", base_config, "--output", str(out),
                 "--sweep-tau", "0.1,1.0", "--draws", "1", "--format", "csv",
                 "--parallelism", "1"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("exponent_b,tau,m")
    assert len(lines) == 3


def test_cluster_reports_blocks(tmp_path, capsys):
    series = clustered_factor_series(700, n_clusters=4, vars_per_cluster=5,
                                     seed=2)
    path = tmp_path / "blocks.csv"
    write_series_csv(series, path)
    labels_path = tmp_path / "labels.csv"
    code = main(["cluster", "--data", str(path), "--split", "train",
                 "--emit-labels", str(labels_path), "--parallelism", "1"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_clusters"] == 4
    assert sorted(payload["sizes"]) == [5, 5, 5, 5]
    lines = labels_path.read_text().splitlines()
    assert lines[0] == "variable,label"
    assert len(lines) == 21


def test_cluster_everything_within_eps(tmp_path, capsys):
    series = clustered_factor_series(700, n_clusters=4, vars_per_cluster=5,
                                     seed=2)
    path = tmp_path / "blocks.csv"
    write_series_csv(series, path)
    code = main(["cluster", "--data", str(path), "--eps", "2.0",
                 "--parallelism", "1"])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["n_clusters"] == 1


def test_missing_dataset_path(capsys):
    code = main(["eval", "--parallelism", "1"])
    assert code == 1
    assert "dataset.path" in capsys.readouterr().err
