from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from src.errors import DegenerateBin
from src.models import SpectralReport
from src.observables import PiecewiseSmooth
from src.transfer import Weight
from src.ulam_spectra import (
    bin_edges,
    consistency_error,
    consistency_slope,
    eigen_spectrum,
    mass_check,
    spectral_report,
    ulam_matrix,
)


def test_uniform_edges(doubling):
    assert bin_edges(doubling, 4, "uniform") == tuple(Fraction(i, 4) for i in range(5))


def test_gamma_aligned_edges(beta32):
    edges = bin_edges(beta32, 4)
    assert Fraction(2, 3) in edges
    assert edges == (0, Fraction(1, 4), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), 1)


def test_edge_errors(doubling):
    with pytest.raises(ValueError):
        bin_edges(doubling, 1)
    with pytest.raises(ValueError):
        bin_edges(doubling, 4, "chebyshev")
    with pytest.raises(DegenerateBin):
        ulam_matrix(doubling, Weight.srb(doubling), 3, edges=[0, Fraction(1, 2), Fraction(1, 2), 1])


def test_doubling_matrix(doubling):
    mat = ulam_matrix(doubling, Weight.srb(doubling), 4, "uniform")
    assert mat.size == 4
    assert mat.masses[(0, 0)] == Fraction(1, 8)
    assert mat.masses[(1, 0)] == Fraction(1, 8)
    assert (0, 1) not in mat.masses
    np.testing.assert_allclose(mat.operator().sum(axis=1), np.ones(4))
    spectrum = eigen_spectrum(mat)
    assert abs(spectrum.leading - 1) < 1e-12
    assert mass_check(spectrum)


def test_explicit_edges(doubling):
    mat = ulam_matrix(doubling, Weight.srb(doubling), 2, edges=[0, Fraction(1, 3), 1])
    assert mat.policy == "explicit"
    assert mat.widths() == [Fraction(1, 3), Fraction(2, 3)]


def test_srb_matrix_conserves_mass(beta32):
    mat = ulam_matrix(beta32, Weight.srb(beta32), 8)
    for j, width in enumerate(mat.widths()):
        column = sum((v for (i, jj), v in mat.masses.items() if jj == j), Fraction(0))
        assert column == width
    assert mass_check(eigen_spectrum(mat))


def test_consistency_on_doubling(doubling):
    srb = Weight.srb(doubling)
    x = PiecewiseSmooth.polynomial([0, 1])
    mat = ulam_matrix(doubling, srb, 4, "uniform")
    assert consistency_error(doubling, srb, mat, x) == pytest.approx(1 / 16)
    errors, slope = consistency_slope(doubling, srb, [8, 16, 32, 64], "uniform")
    assert errors[32] == pytest.approx(1 / 128)
    assert slope == pytest.approx(-1, abs=0.2)


def test_consistency_slope_needs_two_errors(doubling):
    errors, slope = consistency_slope(doubling, Weight.srb(doubling), [8], "uniform")
    assert slope is None
    assert set(errors) == {8}


def test_spectral_report(beta32):
    report = spectral_report(beta32, Weight.srb(beta32), [8, 16], "1..16", depth=16, bv_n=4)
    assert isinstance(report, SpectralReport)
    assert report.lambda_inf == Fraction(2, 3)
    assert report.bv_radius == Fraction(2, 3)
    assert not report.markov
    assert report.k0 == 1
    assert [s.M for s in report.spectra] == [len(bin_edges(beta32, 8)) - 1, len(bin_edges(beta32, 16)) - 1]


def test_spectral_report_of_interval_example(t10_interval):
    map_ = t10_interval.map
    report = spectral_report(map_, Weight.srb(map_), [8], "1..16", depth=16, bv_n=4)
    assert abs(float(report.lambda_inf) - 0.1) < 1e-9
    assert report.bv_radius == Fraction(7, 10)
    assert report.k0 == 1
    assert not report.markov
    assert report.consistency_slope is None
