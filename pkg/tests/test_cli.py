import json

import numpy as np
import pytest

from coevograph.cli import main
from coevograph.config import ConfigError, build_scenario, load_config, resolve_config


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_resolve_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        resolve_config({"scenario": {"preset": "opinion-line-16"}, "runn": {}})


def test_resolve_missing_epsilon_names_field():
    with pytest.raises(ConfigError, match="scenario.epsilon"):
        resolve_config({"scenario": {"preset": "opinion-line-16", "regime": "fast"}})


def test_resolve_unknown_preset():
    with pytest.raises(ConfigError, match="preset"):
        resolve_config({"scenario": {"preset": "nope"}})


def test_preset_overrides_merge():
    resolved = resolve_config(
        {"scenario": {"preset": "opinion-line-16", "horizon": 0.25}, "run": {"dt": 0.05}}
    )
    assert resolved["scenario"]["horizon"] == 0.25
    assert resolved["scenario"]["vertices"]["n"] == 16
    assert resolved["run"]["dt"] == 0.05


def test_build_scenario_from_preset():
    scenario = build_scenario(resolve_config({"scenario": {"preset": "positivity-ghost-20"}}))
    assert scenario.spec.graph.n == 20
    assert scenario.spec.graph.masses[-1] == 0.0
    assert scenario.rho0.min() >= 0.0


def test_simulate_zero_velocity_constant_rho(tmp_path):
    cfg = write(tmp_path / "c.yaml", "scenario:\n  preset: zero-velocity-8\nseed: 1\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header[0] == "t" and header[1] == "rho_1"
    first = [float(x) for x in lines[1].split(",")[1:9]]
    last = [float(x) for x in lines[-1].split(",")[1:9]]
    assert first == last  # zero velocity: mass columns constant
    summary = read_json(out / "summary.json")
    assert summary["truncated"] is False
    assert summary["config"]["scenario"]["velocity"]["kind"] == "zero"


def test_simulate_opinion_line_16_audit(tmp_path):
    cfg = write(tmp_path / "c.yaml", "scenario:\n  preset: opinion-line-16\nseed: 2\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    audit = read_json(out / "audit.json")
    assert audit["mass_drift_max"] <= 1e-10
    assert audit["tv_bound_satisfied"] is True
    assert audit["eta_bound_satisfied"] is True


def test_simulate_malformed_config_exit_2(tmp_path, capsys):
    cfg = write(
        tmp_path / "c.yaml",
        "scenario:\n  preset: opinion-line-16\n  regime: fast\n",
    )
    rc = main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "scenario.epsilon" in capsys.readouterr().err


def test_simulate_dt_and_stride_overrides(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        "scenario:\n  preset: zero-velocity-8\nemit:\n  eta: true\n",
    )
    out = tmp_path / "out"
    assert main([
        "simulate", "--config", cfg, "--out", str(out), "--dt", "0.05", "--eta-stride", "5",
    ]) == 0
    lines = (out / "trajectory.csv").read_text().strip().splitlines()
    assert len(lines) == 22  # header + 21 samples at dt = 0.05
    row1 = lines[1].split(",")
    row2 = lines[2].split(",")
    assert row1[9] != ""  # stride row carries eta
    assert row2[9] == ""  # off-stride row leaves eta cells empty


def test_simulate_picard_solver(tmp_path):
    cfg = write(tmp_path / "c.yaml", "scenario:\n  preset: picard-line-10\nseed: 4\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    summary = read_json(out / "summary.json")
    assert summary["solver"] == "picard"
    assert summary["picard"]["iterations"] >= 1
    assert summary["contraction"]["verdict"] == "contraction_guaranteed"


def test_simulate_divergence_exit_1_with_marker(tmp_path, capsys):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  preset: opinion-line-16
  horizon: 8.0
  velocity:
    kernel: {name: gaussian, sigma: 0.1, amp: 1.0e+8}
run: {dt: 0.25, scheme: euler}
""",
    )
    out = tmp_path / "out"
    with np.errstate(over="ignore", invalid="ignore"):
        rc = main(["simulate", "--config", cfg, "--out", str(out)])
    assert rc == 1
    summary = read_json(out / "summary.json")
    assert summary["truncated"] is True
    assert "non-finite" in summary["error"]


def test_constants_worked_example(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  vertices: {layout: line, n: 4}
  rho0: {profile: uniform, mass: 1.0}
  eta0: {profile: constant, value: 1.0}
  velocity: {kind: zero, c_v: 1.0, l_v: 0.0}
  omega: {kind: constant, value: 0.0}
  interpolation: upwind
  horizon: 1.0
  mass_bound: 1.0
""",
    )
    out = tmp_path / "out"
    assert main(["constants", "--config", cfg, "--out", str(out)]) == 0
    payload = read_json(out / "constants.json")
    assert payload["contraction"]["t_star"] == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert payload["contraction"]["verdict"] == "contraction_not_guaranteed"


def test_constants_zero_config_t_star_one(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  vertices: {layout: line, n: 4}
  rho0: {profile: uniform, mass: 1.0}
  eta0: {profile: constant, value: 0.5}
  velocity: {kind: zero}
  omega: {kind: constant, value: 0.0}
""",
    )
    out = tmp_path / "out"
    assert main(["constants", "--config", cfg, "--out", str(out)]) == 0
    payload = read_json(out / "constants.json")
    assert payload["contraction"]["t_star"] == pytest.approx(1.0, abs=1e-12)


def test_study_slow_zero_rung_in_json(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  preset: slow-study-20
study:
  epsilons: [0.1, 0.0316227766016838, 0.01, 0.0]
seed: 7
""",
    )
    out = tmp_path / "out"
    assert main(["study", "slow", "--config", cfg, "--out", str(out)]) == 0
    payload = read_json(out / "study.json")
    assert payload["errors"][-1] == 0.0
    assert (out / "reference.csv").exists()
    assert (out / "rung_03.csv").exists()


def test_study_fast_slope_window(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  preset: fast-study-20
study:
  epsilons: [0.1, 0.0316227766016838, 0.01]
  gates:
    slope_window: [0.85, 1.15]
    errors_below_bounds: true
    required: true
seed: 7
""",
    )
    out = tmp_path / "out"
    assert main(["study", "fast", "--config", cfg, "--out", str(out), "--jobs", "2"]) == 0
    payload = read_json(out / "study.json")
    assert 0.85 <= payload["slope"] <= 1.15
    assert payload["gates"]["all_passed"] is True


def test_study_kind_mismatch_exit_2(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "scenario:\n  preset: slow-study-20\n")
    rc = main(["study", "fast", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "study.kind" in capsys.readouterr().err


def test_study_graph_limit_single_rung_exit_2(tmp_path, capsys):
    cfg = write(
        tmp_path / "c.yaml",
        "scenario:\n  preset: graph-limit-line\nstudy:\n  kind: graph-limit\n  n_ladder: [16]\n",
    )
    rc = main(["study", "graph-limit", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "n_ladder" in capsys.readouterr().err


def test_study_graph_limit_small(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        """
scenario:
  preset: graph-limit-line
  horizon: 0.25
study:
  kind: graph-limit
  n_ladder: [8, 16, 32]
""",
    )
    out = tmp_path / "out"
    assert main(["study", "graph-limit", "--config", cfg, "--out", str(out)]) == 0
    payload = read_json(out / "study.json")
    assert payload["errors"][1] < payload["errors"][0]
    assert max(payload["extras"]["mass_observable_gaps"]) <= 1e-10


def test_cli_outputs_deterministic(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        "scenario:\n  preset: opinion-line-16\nseed: 99\nemit:\n  eta: true\n",
    )
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("trajectory.csv", "audit.json", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_config_echo_embeds_resolved_values(tmp_path):
    cfg = write(tmp_path / "c.yaml", "scenario:\n  preset: zero-velocity-8\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    echo = read_json(out / "summary.json")["config"]
    # defaults are applied and visible
    assert echo["run"]["scheme"] == "rk4"
    assert echo["emit"]["eta_stride"] == 10
    assert echo["scenario"]["interpolation"] == "upwind"


def test_load_config_reports_yaml_errors(tmp_path):
    bad = write(tmp_path / "c.yaml", "scenario: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)
