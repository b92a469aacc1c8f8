from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest

from src.bounds_examples import single_jump_observable
from src.dual_certificates import (
    ComplexScalar,
    alpha_sequence,
    apply_K,
    certified_radius,
    certify_grid,
    construct_h_K,
    dual_eigen_residual,
    dual_functional,
    ell_lambda,
    jump_depth,
    lambda_grid,
)
from src.errors import LambdaTooLarge, PreconditionK0, ZeroWeight
from src.observables import PiecewiseSmooth, jump_at
from src.transfer import Weight, build_h_suite

HALF = Fraction(1, 2)
TWO_THIRDS = Fraction(2, 3)
X = PiecewiseSmooth.polynomial([0, 1])


def test_complex_scalar():
    one_plus_i = ComplexScalar(Fraction(1), Fraction(1))
    assert one_plus_i ** 2 == ComplexScalar(Fraction(0), Fraction(2))
    assert ComplexScalar(Fraction(3), Fraction(4)).modulus() == 5
    assert ComplexScalar.of(complex(1, -1)) == ComplexScalar(Fraction(1), Fraction(-1))
    assert str(ComplexScalar(Fraction(1), Fraction(2))) == "1+2i"
    assert (one_plus_i - one_plus_i).is_zero


def test_alpha_for_beta(beta32, beta32_table):
    alpha = alpha_sequence(beta32, beta32_table, Weight.srb(beta32))
    assert alpha.k0 == 1
    assert alpha[0] == 1
    assert all(alpha[k] == Fraction(3, 2) ** k for k in range(1, beta32_table.depth + 1))
    assert alpha_sequence(beta32, beta32_table, Weight.srb(beta32), K=5).depth == 5


def test_alpha_preconditions(beta32, beta32_table):
    with pytest.raises(PreconditionK0):
        alpha_sequence(beta32, replace(beta32_table, k0=None), Weight.srb(beta32))
    with pytest.raises(ZeroWeight):
        alpha_sequence(beta32, beta32_table, Weight.custom(beta32, [1, 0]))


def test_dual_functional(beta32, beta32_table):
    srb = Weight.srb(beta32)
    alpha = alpha_sequence(beta32, beta32_table, srb)
    with pytest.raises(LambdaTooLarge):
        dual_functional(beta32, beta32_table, srb, alpha, 1, TWO_THIRDS)
    f = dual_functional(beta32, beta32_table, srb, alpha, HALF, TWO_THIRDS)
    assert f.coefficients[3] == ComplexScalar(Fraction(27, 64))
    assert f.tail_ratio == Fraction(3, 4)
    assert f.tail_factor() == 3 * Fraction(3, 4) ** beta32_table.depth

    value, tail = ell_lambda(f, PiecewiseSmooth.indicator(HALF, 1), beta32_table)
    assert value == ComplexScalar(Fraction(3, 4))
    assert tail == 2 * f.tail_factor()


def test_rank_one_correction(beta32, beta32_table):
    srb = Weight.srb(beta32)
    data = construct_h_K(beta32, srb, beta32_table)
    assert data.k0 == 1
    assert data.normalizer == TWO_THIRDS
    assert jump_at(data.h_K, HALF) == 1
    assert jump_depth(data.h_K, beta32_table) == 1
    K_one = apply_K(data, PiecewiseSmooth.constant(1), beta32_table)
    assert K_one == data.h_K * -TWO_THIRDS


def test_dual_eigen_residual(beta32, beta32_table):
    srb = Weight.srb(beta32)
    data = construct_h_K(beta32, srb, beta32_table)
    alpha = alpha_sequence(beta32, beta32_table, srb)
    f = dual_functional(beta32, beta32_table, srb, alpha, ComplexScalar(Fraction(0), Fraction(1, 3)), TWO_THIRDS)
    row = dual_eigen_residual(beta32, srb, data, f, X * X + 1, beta32_table)
    assert row.verdict == "exact"
    assert row.residual == 0


def test_truncated_jump_is_within_tail(beta32, beta32_table):
    srb = Weight.srb(beta32)
    K = beta32_table.depth
    data = construct_h_K(beta32, srb, beta32_table)
    alpha = alpha_sequence(beta32, beta32_table, srb)
    f = dual_functional(beta32, beta32_table, srb, alpha, HALF, TWO_THIRDS)
    h = single_jump_observable(beta32_table, 0, K)
    row = dual_eigen_residual(beta32, srb, data, f, h, beta32_table)
    # L h jumps only past the table, so only lam * ell(h) survives
    assert row.residual == HALF ** (K + 1) * alpha[K]
    assert row.verdict == "within-tail"
    assert row.residual <= row.tail_bound


def test_lambda_grid():
    grid = lambda_grid(TWO_THIRDS)
    assert len(grid) == 32
    assert grid[0] == ComplexScalar(Fraction(3, 40))
    assert grid[-1] == ComplexScalar(Fraction(0), Fraction(-3, 5))


def test_certify_grid(beta32, beta32_table):
    srb = Weight.srb(beta32)
    suite = build_h_suite(beta32, srb, 3, seed=5, max_iterates=2)
    rows = certify_grid(beta32, srb, beta32_table, suite, TWO_THIRDS)
    assert len(rows) == 32
    assert all(row.verdict != "fail" for row in rows)
    assert certified_radius(rows) == Fraction(3, 5)


def test_jump_depth(beta32_table):
    h = PiecewiseSmooth.indicator(HALF, 1) + PiecewiseSmooth.indicator(Fraction(3, 4), 1)
    assert jump_depth(h, beta32_table) == 2
    assert jump_depth(X, beta32_table) == -1
    assert certified_radius([]) == 0
