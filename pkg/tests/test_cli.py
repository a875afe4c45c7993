import json
import re
from pathlib import Path

import numpy as np
import pytest

from hyerslab.cli import emit_plot_data, main, parse_config, run
from hyerslab.errors import ConfigError, InputDomainError
from hyerslab.reporting import canonical_json, sha256_digest

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def minimal_config(**overrides):
    base = {"experiment": "axioms", "seed": 5, "axioms": {"plans": 3}}
    base.update(overrides)
    return base


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_missing_seed_names_field():
    with pytest.raises(ConfigError) as exc:
        parse_config({"experiment": "axioms"})
    assert exc.value.field == "seed"


def test_unknown_top_level_field_is_named():
    with pytest.raises(ConfigError) as exc:
        parse_config(minimal_config(bogus=1))
    assert exc.value.field == "bogus"


def test_bad_norm_kind_is_named():
    with pytest.raises(ConfigError) as exc:
        parse_config(minimal_config(norm={"kind": "triangular"}))
    assert exc.value.field == "norm.kind"


def test_bad_experiment_is_named():
    with pytest.raises(ConfigError) as exc:
        parse_config({"experiment": "fit", "seed": 1})
    assert exc.value.field == "experiment"


def test_dimension_range():
    with pytest.raises(ConfigError) as exc:
        parse_config(minimal_config(dimension=4))
    assert exc.value.field == "dimension"


def test_normalization_is_idempotent():
    cfg = parse_config(minimal_config())
    assert parse_config(cfg) == cfg


# ---------------------------------------------------------------------------
# run() and exit codes
# ---------------------------------------------------------------------------

def test_axioms_config_exits_zero(tmp_path, capsys):
    path = write_config(tmp_path, minimal_config(
        norm={"kind": "crisp-induced", "p": 1.0}))
    rc = main(["run", "--config", path, "--out", str(tmp_path / "r.json")])
    assert rc == 0
    assert "[PASS] axioms" in capsys.readouterr().out


def test_quadratic_violator_exits_one_with_witness(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["run", "--config", str(CONFIGS / "solution_check_quadratic.json"),
               "--out", str(out)])
    assert rc == 1
    report = json.loads(out.read_text())
    solution = report["suites"]["solution_check"]["solution"]
    assert solution["pass"] is False
    assert solution["witness"] == [[1.0], [0.0], [0.0]]
    assert solution["witness_residual"] == pytest.approx(6.0, abs=1e-12)


def test_nonuniform_worked_example_exits_zero(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["run", "--config", str(CONFIGS / "nonuniform_sine.json"),
               "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    bound = report["suites"]["verify_nonuniform"]["bound_nonuniform"]
    assert bound["crisp_reduction"] and bound["crisp_ok"]
    assert max(bound["bounds"]) == pytest.approx(0.6, abs=1e-12)


def test_malformed_config_exits_two(tmp_path, capsys):
    path = write_config(tmp_path, {"experiment": "axioms"})
    rc = main(["run", "--config", path, "--out", str(tmp_path / "r.json")])
    assert rc == 2
    assert "seed" in capsys.readouterr().err


def test_unreadable_config_exits_two(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "nope.json")])
    assert rc == 2


def test_version_command(capsys):
    assert main(["version"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("hyerslab ")


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("HYERSLAB_SEED", "777")
    out = tmp_path / "r.json"
    path = write_config(tmp_path, minimal_config())
    assert main(["run", "--config", path, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["seed"] == 777
    assert report["config"]["seed"] == 777


# ---------------------------------------------------------------------------
# reproducibility and round-trip
# ---------------------------------------------------------------------------

def test_reports_identical_modulo_wall_clock():
    cfg = parse_config(json.loads((CONFIGS / "nonuniform_sine.json").read_text()))
    a = run(cfg)
    b = run(cfg)
    a.pop("wall_clock_s")
    b.pop("wall_clock_s")
    assert canonical_json(a) == canonical_json(b)


def test_config_echo_round_trip():
    cfg = parse_config(json.loads((CONFIGS / "uniform_sine.json").read_text()))
    report = run(cfg)
    assert parse_config(report["config"]) == report["config"]
    assert report["config_digest"] == sha256_digest(report["config"])


def test_suite_reports_embed_seed_and_digest():
    cfg = parse_config(minimal_config())
    report = run(cfg)
    for suite in report["suites"].values():
        assert suite["seed"] == cfg["seed"]
        assert suite["config_digest"] == report["config_digest"]


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def _nonuniform_report():
    cfg = parse_config(json.loads((CONFIGS / "nonuniform_sine.json").read_text()))
    return run(cfg)


def test_residual_vs_x_csv(tmp_path):
    report = _nonuniform_report()
    out = tmp_path / "r.csv"
    emit_plot_data(report, "residual-vs-x", str(out))
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("# columns:")
    assert lines[1] == "x,residual,bound"
    xs = [float(line.split(",")[0]) for line in lines[2:]]
    assert xs == sorted(xs)
    for line in lines[2:]:
        _, residual, bound = map(float, line.split(","))
        assert residual <= bound + 1e-12


def test_bound_tightness_csv(tmp_path):
    report = _nonuniform_report()
    out = tmp_path / "t.csv"
    emit_plot_data(report, "bound-tightness", str(out))
    lines = out.read_text().strip().splitlines()
    assert lines[1] == "t,min_margin,normalized_margin"
    assert len(lines) == 2 + 240


def test_membership_vs_t_csv(tmp_path):
    cfg = parse_config(json.loads((CONFIGS / "uniform_sine.json").read_text()))
    report = run(cfg)
    out = tmp_path / "m.csv"
    emit_plot_data(report, "membership-vs-t", str(out))
    lines = out.read_text().strip().splitlines()
    assert lines[1] == "t,membership,target"
    rows = [list(map(float, line.split(","))) for line in lines[2:]]
    assert len(rows) == 5
    # memberships climb toward 1 along the schedule
    assert rows[-1][1] > rows[0][1]


def test_empty_probe_series_gives_header_only(tmp_path):
    report = {"suites": {"x": {"bound_nonuniform": {
        "probes": np.zeros((0, 1)), "residuals": [], "bounds": []}}}}
    out = tmp_path / "e.csv"
    emit_plot_data(report, "residual-vs-x", str(out))
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2   # comment + header, no data rows


def test_missing_series_raises_and_exits_two(tmp_path, capsys):
    report = _nonuniform_report()
    with pytest.raises(InputDomainError):
        emit_plot_data(report, "membership-vs-t", str(tmp_path / "x.csv"))
    # through the CLI the same situation must exit 2
    rc = main(["run", "--config", str(CONFIGS / "nonuniform_sine.json"),
               "--out", str(tmp_path / "r.json"), "--plot", "membership-vs-t"])
    assert rc == 2


def test_plot_files_are_deterministic(tmp_path):
    report = _nonuniform_report()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_plot_data(report, "residual-vs-x", str(a))
    emit_plot_data(report, "residual-vs-x", str(b))
    assert a.read_bytes() == b.read_bytes()
