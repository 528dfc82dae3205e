"""Command-line commands through the Flask CLI runner."""
import json
import os

import pytest

from conftest import small_config
from app.cli import flux_highlight, parse_overrides


@pytest.fixture
def small_run_config(tmp_path):
    def _write(name, **optimizer):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(small_config(name, **optimizer)))
        return str(path)
    return _write


@pytest.fixture
def optimized_run(app, runner, small_run_config):
    result = runner.invoke(args=["optimize", "--config", small_run_config("cloak-uniform", max_iter=5)])
    assert result.exit_code == 0, result.output
    return os.path.join(app.config["OUTPUT_DIR"], "cloak-uniform")


def test_parse_overrides():
    assert parse_overrides(["optimizer.max_iter=10", "regions.inner=insulator", "mesh.h=0.5"]) == {
        "optimizer": {"max_iter": 10}, "regions": {"inner": "insulator"}, "mesh": {"h": 0.5}}


# =============================================================================
# db
# =============================================================================

def test_db_build(runner, tmp_path):
    out = tmp_path / "db4"
    result = runner.invoke(args=["db", "build", "--n", "4", "--out", str(out), "--workers", "1"])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("27 generated, ")
    assert "k11: [" in result.output
    assert (out / "properties.csv").exists()
    assert (out / "geometry.bin").exists()


def test_db_build_rejects_odd_size(runner, tmp_path):
    result = runner.invoke(args=["db", "build", "--n", "3", "--out", str(tmp_path / "db3")])
    assert result.exit_code != 0


def test_db_query(runner, small_db_dir):
    result = runner.invoke(args=["db", "query", "--k11", "1.0", "--k22", "1.0", "--db", str(small_db_dir)])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("index ")
    assert "vf=1 " in result.output
    assert "distance=0" in result.output


def test_db_query_without_database(runner, tmp_path):
    result = runner.invoke(args=["db", "query", "--k11", "0.5", "--k22", "0.5", "--db", str(tmp_path / "none")])
    assert result.exit_code == 1
    assert "Error" in result.output


def test_db_plot(runner, small_db_dir, tmp_path):
    out = tmp_path / "cells.png"
    result = runner.invoke(args=["db", "plot", "--db", str(small_db_dir), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "cells plotted to" in result.output
    assert out.read_bytes().startswith(b"\x89PNG")


def test_db_plot_without_database(runner, tmp_path):
    result = runner.invoke(args=["db", "plot", "--db", str(tmp_path / "none")])
    assert result.exit_code == 1


# =============================================================================
# solve / optimize / check-grad
# =============================================================================

def test_solve_writes_the_state(app, runner, small_run_config):
    result = runner.invoke(args=["solve", "--config", small_run_config("conc-uniform")])
    assert result.exit_code == 0, result.output
    assert "T range: [0, 100]" in result.output
    assert "index:" in result.output
    directory = os.path.join(app.config["OUTPUT_DIR"], "conc-uniform")
    for name in ("temperature.vtk", "delta_t.vtk", "flux.csv", "nodes.csv", "centerline.csv"):
        assert os.path.exists(os.path.join(directory, name)), name


def test_optimize_writes_a_run_directory(optimized_run):
    for name in ("config.json", "history.csv", "design.csv", "temperature.vtk", "delta_t.vtk", "flux.csv",
                 "nodes.csv", "centerline.csv", "summary.json"):
        assert os.path.exists(os.path.join(optimized_run, name)), name
    with open(os.path.join(optimized_run, "summary.json"), encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["scenario"] == "cloak-uniform"
    assert summary["final"]["objective"] <= summary["initial"]["objective"]
    assert summary["flux_balance"]["relative"] <= 1e-8
    with open(os.path.join(optimized_run, "design.csv"), encoding="utf-8") as f:
        assert f.readline() == f"# config {summary['config_hash']}\n"


def test_optimize_writes_difference_and_centerline(optimized_run):
    with open(os.path.join(optimized_run, "nodes.csv"), encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    assert lines[0].strip() == "x,y,T,dT"
    # hot edge nodes are fixed in both solves
    assert float(lines[1].split(",")[3]) == 0.0
    with open(os.path.join(optimized_run, "centerline.csv"), encoding="utf-8") as f:
        rows = [line.strip() for line in f if not line.startswith("#")]
    assert rows[0] == "x,y,T_ref,T_initial,T"
    assert len(rows) == 1 + 11
    assert {row.split(",")[1] for row in rows[1:]} == {"5"}
    with open(os.path.join(optimized_run, "delta_t.vtk"), encoding="utf-8") as f:
        assert "SCALARS temperature_difference double 1\n" in f.read()


def test_check_grad_passes(runner):
    result = runner.invoke(args=["check-grad", "--scenario", "rot-uniform", "--samples", "5"])
    assert result.exit_code == 0, result.output
    assert "max relative error:" in result.output
    assert "gradient check passed" in result.output


def test_check_grad_writes_the_gradient(runner, tmp_path):
    path = tmp_path / "grad.csv"
    result = runner.invoke(args=["check-grad", "--scenario", "conc-uniform", "--samples", "3",
                                 "--csv", str(path)])
    assert result.exit_code == 0, result.output
    assert path.read_text().splitlines()[1] == "element,dJ/dk11,dJ/dk22"


def test_unknown_config_key_fails(runner):
    result = runner.invoke(args=["solve", "--scenario", "cloak-uniform", "--set", "optimizer.max_iters=3"])
    assert result.exit_code == 1
    assert "optimizer.max_iters" in result.output


def test_malformed_config_file_fails(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"mesh": ')
    result = runner.invoke(args=["optimize", "--config", str(path)])
    assert result.exit_code == 1
    assert "invalid run configuration" in result.output


def test_unknown_scenario_is_a_usage_error(runner):
    result = runner.invoke(args=["optimize", "--scenario", "cloak-sideways"])
    assert result.exit_code == 2


# =============================================================================
# assemble / report
# =============================================================================

def test_assemble(runner, optimized_run, small_db_dir):
    result = runner.invoke(args=["assemble", "--run", optimized_run, "--db", str(small_db_dir)])
    assert result.exit_code == 0, result.output
    assert "MSE: " in result.output
    assert "R^2: " in result.output
    assert "raster 80x80" in result.output
    with open(os.path.join(optimized_run, "assembly.json"), encoding="utf-8") as f:
        metrics = json.load(f)
    assert metrics["mse"] >= 0.0
    assert metrics["r2"] <= 1.0
    for name in ("scatter.csv", "assembled.pgm", "assembled.png"):
        assert os.path.exists(os.path.join(optimized_run, name)), name


def test_assemble_without_database(runner, optimized_run, tmp_path):
    result = runner.invoke(args=["assemble", "--run", optimized_run, "--db", str(tmp_path / "none")])
    assert result.exit_code == 1


def test_report(runner, optimized_run):
    result = runner.invoke(args=["report", "--run", optimized_run])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("scenario: cloak-uniform")
    assert "cloak:" in result.output
    for name in ("temperature.png", "difference.png", "flux.png", "centerline.png", "design.png"):
        assert os.path.exists(os.path.join(optimized_run, name)), name


def test_report_needs_a_summary(runner, tmp_path):
    result = runner.invoke(args=["report", "--run", str(tmp_path)])
    assert result.exit_code == 1
    assert "summary" in result.output


def test_flux_figure_outlines_the_rotator_target():
    assert flux_highlight(small_config("cloak-uniform")) is None
    target = flux_highlight(small_config("rot-uniform"))
    length, width = small_config("rot-uniform")["regions"]["target"]
    assert len(target) == length * width
    assert len(flux_highlight(small_config("multi-cloak-rot"))) > 0
