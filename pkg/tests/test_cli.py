from __future__ import annotations

import pytest
from click.testing import CliRunner

from src.main import cli

FAST = ["--depth", "16", "--n-range", "1..16", "--bv-n", "4"]


@pytest.fixture
def runner(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECTRA_OUTPUT_DIR", str(tmp_path))
    return CliRunner()


def test_example_gap(runner):
    result = runner.invoke(cli, ["example-gap", "--m", "10", "--c", "0.5", *FAST])
    assert result.exit_code == 0, result.output
    assert "gap 0.6 > 0.5" in result.output


def test_example_gap_below_target_fails(runner):
    result = runner.invoke(cli, ["example-gap", "--m", "10", "--c", "0.65", *FAST])
    assert result.exit_code == 1
    assert "Verification FAILED." in result.output


def test_verify_jump_shift(runner, tmp_path):
    result = runner.invoke(cli, ["verify", "jump-shift", "--map", "builtin:beta:3/2", "--k", "1..32",
                                 "--depth", "40", "--format", "md"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "verify_jump_shift.md").exists()


def test_lambda_on_doubling(runner):
    result = runner.invoke(cli, ["lambda", "--map", "builtin:doubling", *FAST])
    assert result.exit_code == 0, result.output
    assert "Markov" in result.output
    assert "Lambda^inf = 0 (exact)" in result.output


def test_ulam_formats(runner, tmp_path):
    result = runner.invoke(cli, ["ulam", "--m-list", "8,16", "--format", "json", "--format", "svg", *FAST])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "ulam.json").exists()
    assert (tmp_path / "ulam.svg").exists()


@pytest.mark.parametrize(
    "args",
    [
        ["orbits", "--map", "builtin:logistic"],
        ["orbits", "--map", "missing.json"],
        ["lambda", "--weight", "gibbs"],
        ["orbits", "--depth", "0"],
    ],
)
def test_bad_input_exits_2(runner, args):
    result = runner.invoke(cli, args)
    assert result.exit_code == 2
    assert "error:" in result.output


def test_unknown_suite_is_a_usage_error(runner):
    result = runner.invoke(cli, ["verify", "spectral"])
    assert result.exit_code == 2
