from __future__ import annotations

from fractions import Fraction

import pytest

from src.errors import (
    ApproximationError,
    DegreeOverflow,
    InvalidMapSpec,
    PreconditionK0,
    WeightVanishes,
)
from src.map_core import Side
from src.numeric import may_be_zero
from src.observables import PiecewiseSmooth, WeightScheme, compute_norm, jump_at
from src.polynomial import Polynomial
from src.transfer import (
    Weight,
    apply_transfer,
    apply_transfer_n,
    boundedness_constant,
    build_h_suite,
    distortion_coefficients,
    is_nonnegative,
    l1_contraction_check,
    lemma_superDa_check,
    linearity_check,
    positivity_check,
    transfer_paths_agree,
    verify_derivative_identity,
    verify_jump_shift,
)

HALF = Fraction(1, 2)
ONE = PiecewiseSmooth.constant(1)
X = PiecewiseSmooth.polynomial([0, 1])


def test_srb_weight_constants(doubling, tent, beta32):
    assert Weight.srb(doubling).constants() == [HALF, HALF]
    assert Weight.srb(tent).constants() == [HALF, HALF]
    assert Weight.srb(beta32).constants() == [Fraction(2, 3), Fraction(2, 3)]
    assert Weight.srb(beta32).at(beta32, Fraction(2, 3), Side.LEFT) == Fraction(2, 3)


def test_weight_checks(doubling, quadratic_branch_map):
    with pytest.raises(InvalidMapSpec):
        Weight.custom(doubling, [1, 2, 3])
    with pytest.raises(WeightVanishes):
        Weight.constant(doubling, 0).check_nonvanishing(doubling)
    Weight.constant(doubling, 3).check_nonvanishing(doubling)
    with pytest.raises(ValueError):
        Weight.srb(quadratic_branch_map).constants()


def test_doubling_transfer(doubling):
    srb = Weight.srb(doubling)
    assert apply_transfer(doubling, srb, ONE) == ONE
    assert apply_transfer(doubling, srb, X) == PiecewiseSmooth.polynomial([Fraction(1, 4), HALF])


def test_tent_preserves_lebesgue(tent):
    assert apply_transfer(tent, Weight.srb(tent), ONE) == ONE


def test_beta_transfer_of_one(beta32):
    Lh = apply_transfer(beta32, Weight.srb(beta32), ONE)
    assert Lh.breakpoints == (HALF,)
    assert Lh.pieces == (Polynomial([Fraction(4, 3)]), Polynomial([Fraction(2, 3)]))
    assert compute_norm(Lh, "L1") == 1


def test_degree_budget(doubling):
    h = PiecewiseSmooth.polynomial([0] * 17 + [1])
    with pytest.raises(DegreeOverflow):
        apply_transfer(doubling, Weight.constant(doubling, 1), h)
    assert apply_transfer(doubling, Weight.constant(doubling, 1), h, degree_budget=20).max_degree == 17


def test_nonaffine_branch_is_interpolated(quadratic_branch_map):
    srb = Weight.srb(quadratic_branch_map)
    with pytest.raises(ApproximationError):
        apply_transfer(quadratic_branch_map, srb, ONE)
    Lh = apply_transfer(quadratic_branch_map, srb, ONE, approx_tolerance=Fraction(1, 100))
    assert Lh.error_bound > 0
    assert abs(float(compute_norm(Lh, "L1")) - 1) < 0.02


def test_iterates(beta32):
    srb = Weight.srb(beta32)
    assert apply_transfer_n(beta32, srb, X, 0) is X
    twice = apply_transfer(beta32, srb, apply_transfer(beta32, srb, X))
    assert apply_transfer_n(beta32, srb, X, 2) == twice
    assert apply_transfer_n(beta32, srb, X, 2, method="direct") == twice
    assert transfer_paths_agree(beta32, srb, X * X, 3)
    with pytest.raises(ValueError):
        apply_transfer_n(beta32, srb, X, -1)
    with pytest.raises(ValueError):
        apply_transfer_n(beta32, srb, X, 1, method="spectral")


def test_operator_properties(beta32):
    srb = Weight.srb(beta32)
    assert linearity_check(beta32, srb, X, PiecewiseSmooth.indicator(Fraction(1, 3), 1), Fraction(3, 7))
    assert positivity_check(beta32, srb, X)
    assert is_nonnegative(X)
    assert not is_nonnegative(X - HALF)
    assert l1_contraction_check(beta32, srb, ONE) == (1, 1)
    lhs, rhs = l1_contraction_check(beta32, srb, X - HALF)
    assert lhs <= rhs


def test_jump_shift(beta32, beta32_table):
    srb = Weight.srb(beta32)
    h = PiecewiseSmooth.polynomial([1, 0, 1])
    report = verify_jump_shift(beta32, srb, beta32_table, h, range(1, 21))
    assert report.passed
    assert report.max_residual == 0
    assert set(report.residuals) == set(range(1, 21))
    with pytest.raises(PreconditionK0):
        verify_jump_shift(beta32, srb, beta32_table, h, range(0, 3))
    with pytest.raises(ValueError):
        verify_jump_shift(beta32, srb, beta32_table, h, [beta32_table.depth + 1])


@pytest.mark.parametrize("h", [X * X, PiecewiseSmooth.indicator(Fraction(1, 3), 1) * X])
def test_derivative_identity(beta32, h):
    assert verify_derivative_identity(beta32, Weight.srb(beta32), h).passed


def test_distortion_closed_form(beta32):
    table = distortion_coefficients(beta32, Weight.srb(beta32), 2, 2)
    assert table.closed_form_ok
    assert table.b_matches_a
    assert table.sup_norms[(2, 2)] == Fraction(4, 9) ** 2


def test_super_da(beta32):
    report = lemma_superDa_check(beta32, Weight.srb(beta32), X * X * X, 2, 2)
    assert report.passed
    assert report.details["closed_form_ok"]


def test_h_suite_is_seeded(beta32):
    srb = Weight.srb(beta32)
    first = build_h_suite(beta32, srb, 4, seed=7)
    assert len(first) == 4
    assert first == build_h_suite(beta32, srb, 4, seed=7)


def test_boundedness_constant(beta32, beta32_table):
    srb = Weight.srb(beta32)
    suite = build_h_suite(beta32, srb, 3, seed=11, max_iterates=2)
    assert boundedness_constant(beta32, srb, WeightScheme.uniform(beta32_table), beta32_table, suite) > 0


def test_interval_example_transfer_jumps_at_b(t10_interval):
    map_ = t10_interval.map
    srb = Weight.srb(map_)
    b = map_.branches[3](Fraction(1))
    assert b.contains(t10_interval.b)
    for h in (ONE, X, apply_transfer(map_, srb, X)):
        g = apply_transfer(map_, srb, h)
        assert b in g.breakpoints
        assert not may_be_zero(jump_at(g, b))


def test_interval_example_paths_and_distortion(t10_interval):
    map_ = t10_interval.map
    srb = Weight.srb(map_)
    assert transfer_paths_agree(map_, srb, X, 2)
    table = distortion_coefficients(map_, srb, 2, 2)
    assert table.closed_form_ok
    assert table.b_matches_a
