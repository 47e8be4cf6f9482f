import json
import math
from pathlib import Path

import pytest

from triform import FormationGraph, IntegratorConfig
from triform.cli import main
from triform.scenario import (
    ConfigError,
    InitialSpec,
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    load_scenario,
    make_builtin_scenario,
    resolve,
    save_scenario,
    two_columns_layout,
)

SQRT3 = math.sqrt(3.0)


def triangle_config(**overrides):
    defaults = dict(
        graph="triangle",
        root_edge=(1, 2),
        d_star=2.0,
        k_gain=20.0,
        initial=InitialSpec(positions=((-1.0, 0.0), (1.0, 0.0), (0.5, 0.5))),
        integrator=IntegratorConfig(record_stride=200),
    )
    defaults.update(overrides)
    return ScenarioConfig(**defaults)


# ---------------------------------------------------------------------------
# Config round trips and validation
# ---------------------------------------------------------------------------

def test_config_round_trip_builtin(tmp_path):
    cfg = triangle_config()
    assert config_from_dict(config_to_dict(cfg)) == cfg
    path = tmp_path / "scenario.json"
    save_scenario(cfg, path)
    assert load_scenario(path) == cfg


def test_config_round_trip_explicit_graph(tmp_path):
    graph = FormationGraph(3, [(1, 2), (2, 3), (1, 3)], [(1, 2, 3)])
    cfg = ScenarioConfig(
        graph=graph,
        root_edge=(1, 2),
        d_star=1.5,
        k_gain=0.6,
        initial=InitialSpec(seed=11, box=(0.0, 5.0, 0.0, 5.0)),
        integrator=IntegratorConfig(dt=2e-3, t_max=10.0, record_stride=50),
        kappa=1.25,
    )
    path = tmp_path / "scenario.json"
    save_scenario(cfg, path)
    assert load_scenario(path) == cfg


def test_config_round_trip_layout():
    cfg = make_builtin_scenario("paper-10", k_gain=20.0)
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_two_columns_layout_shape():
    pts = two_columns_layout(10, 2.0)
    assert len(pts) == 10
    assert all(p.x == 0.0 for p in pts[:5])
    assert all(p.x == 6.0 for p in pts[5:])
    assert pts[0].y > pts[4].y  # agent 1 on top


def test_config_errors_carry_field_context(tmp_path):
    with pytest.raises(ConfigError, match="k_gain"):
        triangle_config(k_gain=-1.0)
    with pytest.raises(ConfigError, match="d_star"):
        triangle_config(d_star=0.0)
    with pytest.raises(ConfigError, match="initial"):
        InitialSpec()
    with pytest.raises(ConfigError, match="root_edge"):
        config_from_dict({"graph": "triangle", "root_edge": [1], "d_star": 2, "k_gain": 1,
                          "initial": {"layout": "two-columns"}})
    with pytest.raises(ConfigError, match="unknown field"):
        config_from_dict({"graph": "triangle", "root_edge": [1, 2], "d_star": 2, "k_gain": 1,
                          "initial": {"positions": [[0, 0]] * 3}, "extra": 1})
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json }")
    with pytest.raises(ConfigError, match="line"):
        load_scenario(bad)


def test_resolve_checks_position_count():
    cfg = triangle_config(initial=InitialSpec(positions=((0.0, 0.0), (1.0, 0.0))))
    with pytest.raises(ConfigError, match="initial.positions"):
        resolve(cfg)


def test_unknown_builtin_rejected():
    with pytest.raises(ConfigError, match="graph"):
        triangle_config(graph="hexagon")


# ---------------------------------------------------------------------------
# simulate command
# ---------------------------------------------------------------------------

def run_cli(*argv):
    return main([str(a) for a in argv])


def test_simulate_triangle_converges(tmp_path):
    cfg_path = tmp_path / "tri.json"
    save_scenario(triangle_config(), cfg_path)
    out = tmp_path / "run"
    code = run_cli("simulate", "--config", cfg_path, "--out-dir", out)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["termination_reason"] == "converged"
    assert manifest["final_max_dist_err"] < 1e-6
    assert manifest["terminal_equilibrium"]["in_target_set"] is True
    traj = (out / "trajectory.csv").read_text().splitlines()
    assert traj[0].split(",")[:3] == ["t", "x_1", "y_1"]
    assert traj[0].split(",")[-3:] == ["max_dist_err", "max_area_err", "max_u_norm"]
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert len(metrics) == len(traj)


def test_simulate_metrics_are_byte_deterministic(tmp_path):
    cfg_path = tmp_path / "tri.json"
    save_scenario(triangle_config(), cfg_path)
    run_cli("simulate", "--config", cfg_path, "--out-dir", tmp_path / "a")
    run_cli("simulate", "--config", cfg_path, "--out-dir", tmp_path / "b")
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_simulate_seeded_runs_are_deterministic(tmp_path):
    cfg = make_builtin_scenario(
        "paper-10",
        k_gain=20.0,
        initial=InitialSpec(seed=5, box=(0.0, 10.0, 0.0, 10.0)),
        integrator=IntegratorConfig(record_stride=500),
    )
    cfg_path = tmp_path / "p10.json"
    save_scenario(cfg, cfg_path)
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", tmp_path / "a") == 0
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", tmp_path / "b") == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    # a different seed gives a different trajectory
    assert run_cli("simulate", "--config", cfg_path, "--seed", 6, "--out-dir", tmp_path / "c") == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() != (tmp_path / "c" / "metrics.csv").read_bytes()


def test_simulate_labels_flipped_terminal_point(tmp_path):
    cfg = triangle_config(
        k_gain=0.6,
        initial=InitialSpec(positions=((-1.0, 0.0), (1.0, 0.0), (0.0, -2.0))),
    )
    cfg_path = tmp_path / "flip.json"
    save_scenario(cfg, cfg_path)
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    label = manifest["terminal_equilibrium"]
    assert label["matched"] == "below-axis"
    assert label["in_target_set"] is False


def test_simulate_config_error_exit_code_and_manifest_only(tmp_path):
    doc = config_to_dict(triangle_config())
    doc["k_gain"] = -1.0
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", out) == 64
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["termination_reason"] == "config-error"
    assert "k_gain" in manifest["error"]
    assert not (out / "trajectory.csv").exists()


def test_simulate_timeout_exit_code(tmp_path):
    cfg = triangle_config(
        integrator=IntegratorConfig(t_max=0.01, grad_norm_tol=1e-13, record_stride=5)
    )
    cfg_path = tmp_path / "slow.json"
    save_scenario(cfg, cfg_path)
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", tmp_path / "run") == 2


def test_simulate_divergence_exit_code(tmp_path):
    cfg = triangle_config(
        initial=InitialSpec(positions=((-1.0, 0.0), (1.0, 0.0), (80.0, 80.0))),
        integrator=IntegratorConfig(method="euler", dt=0.5, t_max=10.0),
    )
    cfg_path = tmp_path / "boom.json"
    save_scenario(cfg, cfg_path)
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", cfg_path, "--out-dir", out) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["termination_reason"] == "diverged"
    assert manifest["diverged_at"] > 0


def test_shipped_benchmark_scenario_runs(tmp_path):
    cfg = Path(__file__).resolve().parent.parent / "scenarios" / "paper10-two-columns-k20.json"
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["termination_reason"] == "converged"
    assert manifest["final_max_dist_err"] < 1e-4
    assert manifest["final_max_area_err"] < 1e-4


def test_simulate_k_override(tmp_path):
    cfg_path = tmp_path / "tri.json"
    save_scenario(triangle_config(), cfg_path)
    out = tmp_path / "run"
    assert run_cli("simulate", "--config", cfg_path, "--k", 0.6, "--out-dir", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["k_gain"] == 0.6


# ---------------------------------------------------------------------------
# analyze command
# ---------------------------------------------------------------------------

def test_analyze_single_gain(tmp_path):
    out = tmp_path / "rep"
    assert run_cli("analyze", "--k", 20.0, "--out-dir", out) == 0
    rows = (out / "equilibria.csv").read_text().splitlines()
    assert len(rows) == 2  # header plus the lone apex equilibrium
    assert "apex-correct" in rows[1]
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[1].split(",")[1] == "global"


def test_analyze_sweep_stable_counts(tmp_path):
    out = tmp_path / "rep"
    assert run_cli("analyze", "--k-range", "0.1:3.0:0.1", "--out-dir", out) == 0
    lines = (out / "summary.csv").read_text().splitlines()[1:]
    boundary = 2.0 * SQRT3 - 2.0
    assert len(lines) == 30
    for line in lines:
        k_str, _, _, _, n_stable = line.split(",")
        k = float(k_str)
        assert int(n_stable) == (2 if k < boundary else 1)


def test_analyze_exact_boundary_row_is_degenerate(tmp_path):
    out = tmp_path / "rep"
    assert run_cli("analyze", "--exact-boundary", "--out-dir", out) == 0
    rows = (out / "equilibria.csv").read_text().splitlines()
    below = [r for r in rows if "below-axis" in r]
    assert len(below) == 1
    assert "degenerate" in below[0]
    assert json.loads((out / "manifest.json").read_text())["termination_reason"] == "ok"


def test_analyze_requires_a_gain(tmp_path):
    assert run_cli("analyze", "--out-dir", tmp_path / "rep") == 64


# ---------------------------------------------------------------------------
# basin command
# ---------------------------------------------------------------------------

def test_basin_zero_cells_writes_empty_file(tmp_path):
    out = tmp_path / "basin"
    assert run_cli("basin", "--k", 20.0, "--grid", "0x0", "--out-dir", out) == 0
    lines = (out / "basin.csv").read_text().splitlines()
    assert len(lines) == 1  # header only
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["cells"] == 0


def test_basin_high_gain_small_grid(tmp_path):
    out = tmp_path / "basin"
    assert run_cli("basin", "--k", 20.0, "--grid", "3x3", "--out-dir", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["fraction_correct"] == 1.0
    lines = (out / "basin.csv").read_text().splitlines()
    assert len(lines) == 10
    assert all("correct" in line for line in lines[1:])


def test_basin_parallel_output_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("basin", "--k", "0.6", "--grid", "3x3", "--jobs", 1, "--out-dir", a) == 0
    assert run_cli("basin", "--k", "0.6", "--grid", "3x3", "--jobs", 2, "--out-dir", b) == 0
    assert (a / "basin.csv").read_bytes() == (b / "basin.csv").read_bytes()


def test_basin_rejects_bad_grid(tmp_path):
    assert run_cli("basin", "--k", 20.0, "--grid", "three", "--out-dir", tmp_path / "x") == 64


# ---------------------------------------------------------------------------
# sweep-gain command
# ---------------------------------------------------------------------------

def test_sweep_gain_reports_regimes_and_fractions(tmp_path):
    out = tmp_path / "sweep"
    code = run_cli(
        "sweep-gain", "--k-range", "0.6:2.6:1.0", "--grid", "3x3", "--out-dir", out
    )
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "k_gain,regime,n_equilibria,n_stable,fraction_correct"
    rows = [line.split(",") for line in lines[1:]]
    assert [r[1] for r in rows] == ["bistable", "global", "global"]
    assert float(rows[0][4]) < 1.0
    assert float(rows[1][4]) == 1.0
    assert float(rows[2][4]) == 1.0
