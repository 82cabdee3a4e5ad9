"""Command line behavior: subcommands, exit codes, artifact determinism."""
import json
from pathlib import Path

import pytest
import yaml

from pxlap import (
    BallContainmentError,
    CertificationError,
    CertifierInconsistencyError,
    ConfigError,
    ExponentValidationError,
    FieldMismatchError,
    HypothesisError,
    LandscapeError,
    NormBisectionError,
    SaddleSearchError,
    ScalarField,
    make_grid,
    write_field_csv,
)
from pxlap.cli import _exit_code, main
from pxlap.config import DEFAULT_CONFIG_YAML, config_from_dict, default_config

SMALL_SOLVE_YAML = """\
grid:
  nodes: [12, 12]
solver:
  multistart: 8
  path_nodes: 15
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_exit_code_table():
    assert _exit_code(ConfigError("x")) == 2
    assert _exit_code(ExponentValidationError("exponent range error", "x")) == 3
    assert _exit_code(HypothesisError("x")) == 4
    assert _exit_code(LandscapeError("x")) == 5
    assert _exit_code(SaddleSearchError("x")) == 6
    assert _exit_code(NormBisectionError("x")) == 6
    assert _exit_code(BallContainmentError("x")) == 6
    assert _exit_code(FieldMismatchError("x")) == 6
    assert _exit_code(CertificationError("x")) == 7
    assert _exit_code(CertifierInconsistencyError("x")) == 8


def test_defaults_prints_usable_reference(capsys):
    assert main(["defaults"]) == 0
    out = capsys.readouterr().out
    assert out == DEFAULT_CONFIG_YAML
    assert config_from_dict(yaml.safe_load(out)) == default_config()


def test_validate_json(capsys):
    assert main(["validate", "--json", "--nodes", "12"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["p_minus"] == pytest.approx(1.5)
    assert data["p_plus"] == pytest.approx(1.8)
    assert data["pstar_minus"] == pytest.approx(6.0)
    assert data["coupling_admissible"] is True
    # relative mode: the resolved coupling is the config value over the ratio
    assert data["coupling"] * data["theta_hat"] == pytest.approx(2.0)
    assert data["lambda_min"] == pytest.approx(1.0 / data["theta_hat"])
    assert data["hypotheses"]["zero_at_origin"] is True


def test_validate_flags_inadmissible_coupling(tmp_path, capsys):
    cfg = _write(
        tmp_path, "weak.yaml", "coupling:\n  mode: absolute\n  value: 0.5\n"
    )
    assert main(["validate", "-c", cfg, "--nodes", "12"]) == 0
    out = capsys.readouterr().out
    assert "NOT admissible" in out


def test_exit_2_on_config_problems(tmp_path, capsys):
    bad = _write(tmp_path, "bad.yaml", "bogus_section: {}\n")
    assert main(["validate", "-c", bad]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["validate", "-c", str(tmp_path / "missing.yaml")]) == 2


def test_exit_3_on_exponent_rejection(tmp_path, capsys):
    cfg = _write(tmp_path, "p3.yaml", "exponents:\n  p: '3.0'\n")
    assert main(["validate", "-c", cfg, "--nodes", "12"]) == 3
    assert "error:" in capsys.readouterr().err


def test_exit_4_on_hypothesis_rejection(tmp_path, capsys):
    cfg = _write(
        tmp_path, "lin.yaml", "nonlinearity:\n  kind: pure_power\n  power: 1.0\n"
    )
    assert main(["validate", "-c", cfg, "--nodes", "12"]) == 4
    assert "ratio" in capsys.readouterr().err


def test_exit_5_on_zero_source(tmp_path, capsys):
    cfg = _write(tmp_path, "zero.yaml", "nonlinearity:\n  kind: zero\n")
    assert main(["validate", "-c", cfg, "--nodes", "12"]) == 5
    assert "not witnessed" in capsys.readouterr().err


def test_recursion_subcommand(capsys):
    assert main(["recursion", "1", "2", "1", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "i,value"
    assert lines[-1].startswith("verdict: diverged")
    values = [float(row.split(",")[1]) for row in lines[1:-1]]
    assert values[0] == 2.0
    assert values[1] == pytest.approx(4.0, rel=1e-9)
    assert values[2] == pytest.approx(32.0, rel=1e-9)

    assert main(["recursion", "1", "2", "1", "0.5", "--floor", "0.01"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1].startswith("verdict: converged")

    assert main(["recursion", "1", "2", "1", "0.5", "--steps", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[-1].startswith("verdict: undecided")
    assert len(lines) == 1 + 4 + 1  # header, a_0..a_3, verdict


def test_solve_writes_deterministic_artifacts(tmp_path, capsys):
    cfg = _write(tmp_path, "solve.yaml", SMALL_SOLVE_YAML)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["solve", "-c", cfg, "--out", str(out_a)]) == 0
    text = capsys.readouterr().out
    assert "found 3 solutions" in text
    assert "certified: True" in text

    expected = {
        "report.json", "u0.csv", "u1.csv", "u2.csv", "base_u1.csv",
        "base_u2.csv", "trace_u1.csv", "levels_u0.csv", "levels_u1.csv",
        "levels_u2.csv",
    }
    assert {p.name for p in out_a.iterdir()} == expected

    report = json.loads((out_a / "report.json").read_text())
    assert report["final_run"]["found_count"] == 3
    assert report["certification"]["all_certified"] is True
    assert report["certification"]["attempts"] == 1
    assert report["seed"] == 20260823
    assert report["final_run"]["energies"]["u1"]["energy"] < 0.0
    assert report["final_run"]["energies"]["u2"]["energy"] > 0.0

    # a rerun with the same config must reproduce every artifact byte for byte
    assert main(["solve", "-c", cfg, "--out", str(out_b)]) == 0
    capsys.readouterr()
    for name in sorted(expected):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_sweep_deterministic_across_workers(tmp_path, capsys):
    sweep_yaml = SMALL_SOLVE_YAML + (
        "sweep:\n"
        "  coupling_values: [2.0]\n"
        "  perturbation_fractions: [0.0, 1.0]\n"
        "  workers: 1\n"
    )
    cfg = _write(tmp_path, "sweep.yaml", sweep_yaml)
    out_a = tmp_path / "w1"
    out_b = tmp_path / "w2"
    assert main(["sweep", "-c", cfg, "--out", str(out_a)]) == 0
    text = capsys.readouterr().out
    assert "2 cells" in text
    assert main(["sweep", "-c", cfg, "--workers", "2", "--out", str(out_b)]) == 0
    capsys.readouterr()
    csv_a = (out_a / "sweep.csv").read_text()
    csv_b = (out_b / "sweep.csv").read_text()
    assert csv_a == csv_b
    rows = csv_a.strip().splitlines()
    assert len(rows) == 3  # header plus one row per cell
    header = rows[0].split(",")
    for row in rows[1:]:
        rec = dict(zip(header, row.split(",")))
        assert rec["found_count"] == "3"
        assert rec["certified"] == "1"
        assert rec["status_u1"] == "converged"


def test_certify_subcommand(tmp_path, capsys):
    grid = make_grid([[0.0, 1.0], [0.0, 1.0]], 12)
    zero_csv = tmp_path / "zero.csv"
    write_field_csv(ScalarField.zeros(grid), zero_csv)
    assert main(
        ["certify", "--nodes", "12", "--field", str(zero_csv), "--height", "2"]
    ) == 0
    assert "certified True" in capsys.readouterr().out

    big = ScalarField(3.0 + 0.0 * grid.coordinate_arrays()[0], grid)
    big_csv = tmp_path / "big.csv"
    write_field_csv(big, big_csv)
    assert main(
        ["certify", "--nodes", "12", "--field", str(big_csv), "--height", "2"]
    ) == 7
    assert "certified False" in capsys.readouterr().out
