from __future__ import annotations

import pytest

from src.analyzer import EXTRA_CHECKS, SUITES, VerificationSuite, safe_analyze, summarize_failures
from src.errors import PreconditionK0
from src.orbits import discontinuity_orbits
from src.transfer import Weight

SMALL_CONFIG = {
    "run_settings": {"seed": 3},
    "orbits": {"n_range": "1..16", "tail_fraction": 0.25},
    "bounds": {"bv_n": 4, "ly_n_max": 3, "lambda_tilde": "3/4"},
    "verify": {
        "suite_size": 3,
        "lattice_size": 3,
        "max_iterates": 2,
        "k_range": "1..12",
        "super_da_n": 2,
        "super_da_p": 2,
        "super_da_samples": 2,
    },
}


@pytest.fixture
def beta_suite(beta32, beta32_table):
    return VerificationSuite(beta32, Weight.srb(beta32), beta32_table, SMALL_CONFIG)


@pytest.fixture
def doubling_suite(doubling):
    return VerificationSuite(doubling, Weight.srb(doubling), discontinuity_orbits(doubling, 8), SMALL_CONFIG)


def test_settings_are_read(beta_suite):
    assert beta_suite.seed == 3
    assert beta_suite.k_range == tuple(range(1, 13))
    assert len(beta_suite.suite) == 3
    assert beta_suite.lambdas[0] == beta_suite.lambdas[1]


def test_explicit_ranges_win(beta32, beta32_table):
    suite = VerificationSuite(beta32, Weight.srb(beta32), beta32_table, SMALL_CONFIG,
                              seed=9, k_range="2..4", n_range="1..8")
    assert suite.seed == 9
    assert suite.k_range == (2, 3, 4)
    assert suite.n_range == tuple(range(1, 9))


@pytest.mark.parametrize("name", SUITES + EXTRA_CHECKS)
def test_each_check_passes_on_beta(beta_suite, name):
    result = beta_suite.analyze(name)[name]
    assert result["passed"], result["rows"]
    assert result["rows"]


def test_lasota_yorke_reports_the_scheme(beta_suite):
    result = beta_suite.analyze("ly")["ly"]
    assert result["r"] == 1
    assert result["n_fit"] == 1
    single = [row for row in result["rows"] if row["kind"] == "single-jump"]
    assert [row["n"] for row in single] == [1, 2, 3]
    held_out = [row["n"] for row in result["rows"] if row["kind"] == "suite"]
    assert held_out == [2, 3]
    continuous = [row for row in result["rows"] if row["kind"] == "continuous"]
    assert [row["n"] for row in continuous] == [1, 2, 3]
    assert all(set(row) == {"kind", "n", "value", "bound", "passed"} for row in result["rows"])


def test_norm_lattice_reports_the_jump_tail(beta_suite):
    (row,) = beta_suite.analyze("norm-lattice")["norm-lattice"]["rows"]
    assert row["jump_tail"] != "none"
    assert "exact" in row["jump_tail"]


def test_two_orbit_jump_shift(two_orbit, two_orbit_weight):
    table = discontinuity_orbits(two_orbit, 16)
    result = VerificationSuite(two_orbit, two_orbit_weight, table, SMALL_CONFIG).analyze("jump-shift")
    rows = result["jump-shift"]["rows"]
    assert {row["orbit"] for row in rows} == {0, 1}
    assert result["jump-shift"]["passed"]


def test_all_skips_orbit_checks_on_markov_maps(doubling_suite):
    results = doubling_suite.analyze("all")
    assert set(results) == set(SUITES + EXTRA_CHECKS)
    for name in ("jump-shift", "dual-eigen", "ly", "norm-lattice"):
        assert results[name]["skipped"]
    assert "boundedness" not in results["l1-contraction"]
    assert summarize_failures(results) == []


def test_single_suite_keeps_the_precondition(doubling_suite):
    with pytest.raises(PreconditionK0):
        doubling_suite.analyze("jump-shift")
    folded = safe_analyze(doubling_suite, "jump-shift")
    assert summarize_failures(folded) == ["jump-shift"]
    assert "k0" in folded["jump-shift"]["error"]


def test_unknown_suite(beta_suite):
    with pytest.raises(ValueError):
        beta_suite.analyze("spectral-gap")
