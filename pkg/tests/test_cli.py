"""Command-line tests."""

import csv
import io

import pytest
from typer.testing import CliRunner

from vanet_aggregator.main import app

runner = CliRunner()


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def small_conf(tmp_path):
    path = tmp_path / "small.conf"
    path.write_text("# quick network\nnode_count = 6\nsim_duration = 60\nseed = 2\n", encoding="utf-8")
    return path


def test_sizing():
    result = runner.invoke(app, ["analyze", "sizing"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "schema_version,hash,packet_size,signature_area,max_signatures,max_signers_practical"
    assert len(lines) == 13
    assert [(r["hash"], r["packet_size"], r["max_signatures"]) for r in _rows(result.stdout)][7] == ("SHA-1", "1024", "46")


def test_prob():
    result = runner.invoke(app, ["analyze", "prob", "--k", "6,10", "--n", "2..70"])
    assert result.exit_code == 0
    rows = _rows(result.stdout)
    assert len(rows) == 138
    k10 = {int(r["n"]): float(r["p_at_least_two"]) for r in rows if r["k"] == "10"}
    k6 = {int(r["n"]): float(r["p_at_least_two"]) for r in rows if r["k"] == "6"}
    assert k10[10] == 1.0
    assert k10[20] == pytest.approx(0.99998, abs=1e-5)
    assert k6[20] < k10[20]


@pytest.mark.parametrize("n", ["1..300", "9..3", "x"])
def test_prob_bad_range(n):
    result = runner.invoke(app, ["analyze", "prob", "--n", n])
    assert result.exit_code == 2


def test_cells(tmp_path):
    out = tmp_path / "cells.csv"
    result = runner.invoke(app, ["analyze", "cells", "--output", str(out)])
    assert result.exit_code == 0
    (row,) = _rows(out.read_text(encoding="utf-8"))
    assert float(row["cell_area"]) == 3456
    assert row["max_group_size"] == "9"


def test_sim_run(small_conf, tmp_path):
    trace = tmp_path / "trace.tsv"
    out = tmp_path / "run.csv"
    result = runner.invoke(
        app, ["sim", "run", "--config", str(small_conf), "--trace", str(trace), "--output", str(out)]
    )
    assert result.exit_code == 0
    (row,) = _rows(out.read_text(encoding="utf-8"))
    assert row["scheme"] == "aggregated"
    assert row["seed"] == "2"
    assert trace.read_text(encoding="utf-8")


def test_sim_run_is_deterministic(small_conf):
    first = runner.invoke(app, ["sim", "run", "--config", str(small_conf), "--seed", "9"])
    second = runner.invoke(app, ["sim", "run", "--config", str(small_conf), "--seed", "9"])
    assert first.exit_code == second.exit_code == 0
    assert first.stdout == second.stdout


def test_sim_run_baseline(small_conf):
    result = runner.invoke(app, ["sim", "run", "--config", str(small_conf), "--baseline"])
    assert result.exit_code == 0
    assert _rows(result.stdout)[0]["scheme"] == "baseline"


def test_missing_config_is_config_error(tmp_path):
    result = runner.invoke(app, ["sim", "run", "--config", str(tmp_path / "nope.conf")])
    assert result.exit_code == 3


def test_unknown_key_is_config_error(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("nodes = 3\n", encoding="utf-8")
    result = runner.invoke(app, ["sim", "run", "--config", str(path)])
    assert result.exit_code == 3
    assert "node_count = 20" in result.output


def test_unknown_preset_is_config_error():
    result = runner.invoke(app, ["sim", "run", "--preset", "nope"])
    assert result.exit_code == 3


def test_too_many_adversaries_is_runtime_error(tmp_path):
    path = tmp_path / "adv.conf"
    path.write_text("node_count = 3\nsim_duration = 10\nadversaries = FalseInfo:5\n", encoding="utf-8")
    result = runner.invoke(app, ["sim", "run", "--config", str(path)])
    assert result.exit_code == 4


def test_table2_preset():
    result = runner.invoke(app, ["sim", "run", "--preset", "table2"])
    assert result.exit_code == 0
    rows = _rows(result.stdout)
    assert len(rows) == 12
    for row in rows:
        assert float(row["mean_verified"]) == pytest.approx(min(int(row["n"]), 10), abs=1)


def test_table2_sweep_honours_runs():
    result = runner.invoke(app, ["sim", "sweep", "--preset", "table2", "--runs", "1"])
    assert result.exit_code == 0
    rows = _rows(result.stdout)
    assert len(rows) == 12
    assert {row["runs"] for row in rows} == {"1"}
    assert runner.invoke(app, ["sim", "sweep", "--preset", "table2", "--runs", "0"]).exit_code == 2


def test_sweep(small_conf, tmp_path):
    runs_csv = tmp_path / "runs.csv"
    summary_csv = tmp_path / "summary.csv"
    database = tmp_path / "archive.db"
    result = runner.invoke(
        app,
        [
            "sim", "sweep",
            "--config", str(small_conf),
            "--nodes", "4..8",
            "--step", "4",
            "--runs", "2",
            "--runs-output", str(runs_csv),
            "--database", str(database),
            "--output", str(summary_csv),
        ],
    )
    assert result.exit_code == 0
    summary = _rows(summary_csv.read_text(encoding="utf-8"))
    assert [row["node_count"] for row in summary] == ["4", "8"]
    assert len(_rows(runs_csv.read_text(encoding="utf-8"))) == 8
    assert database.is_file()


def test_single_run_sweep_equals_run(small_conf, tmp_path):
    runs_csv = tmp_path / "runs.csv"
    sweep = runner.invoke(
        app,
        ["sim", "sweep", "--config", str(small_conf), "--nodes", "6", "--runs", "1", "--seed", "5",
         "--runs-output", str(runs_csv)],
    )
    single = runner.invoke(app, ["sim", "run", "--config", str(small_conf), "--seed", "5"])
    assert sweep.exit_code == single.exit_code == 0
    aggregated = [row for row in _rows(runs_csv.read_text(encoding="utf-8")) if row["scheme"] == "aggregated"]
    assert aggregated == _rows(single.stdout)


@pytest.mark.parametrize("args", [["--nodes", "8..4"], ["--runs", "0"], ["--step", "0"]])
def test_sweep_usage_errors(small_conf, args):
    result = runner.invoke(app, ["sim", "sweep", "--config", str(small_conf), *args])
    assert result.exit_code == 2


@pytest.mark.slow
def test_aggregation_beats_baseline_on_every_node_count(tmp_path):
    out = tmp_path / "fig12.csv"
    result = runner.invoke(
        app,
        ["sim", "sweep", "--preset", "fig12", "--nodes", "10..40", "--runs", "100", "--workers", "4", "--output", str(out)],
    )
    assert result.exit_code == 0
    for row in _rows(out.read_text(encoding="utf-8")):
        assert float(row["packets_aggregated_mean"]) < float(row["packets_baseline_mean"])
        assert row["false_reliable_total"] == "0"
