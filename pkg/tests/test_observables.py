from __future__ import annotations

from fractions import Fraction

import pytest

from src.errors import OutOfDomain, UntaggedJump
from src.map_core import Side
from src.numeric import Enclosure
from src.observables import (
    PiecewiseSmooth,
    WeightScheme,
    compute_norm,
    continuous_norm,
    custom_norm,
    decompose_derivative,
    jump_at,
    jump_norm,
    jump_tail_bound,
    orbit_jump,
    start_jump,
    zeta_jump_norm,
)
from src.polynomial import Polynomial

HALF = Fraction(1, 2)
x = PiecewiseSmooth.polynomial([0, 1])


def test_construction_checks():
    with pytest.raises(ValueError):
        PiecewiseSmooth((HALF,), (Polynomial(),))
    with pytest.raises(ValueError):
        PiecewiseSmooth((HALF, Fraction(1, 4)), (Polynomial(),) * 3)
    with pytest.raises(ValueError):
        PiecewiseSmooth((Fraction(1),), (Polynomial(),) * 2)


def test_indicator_limits_and_jumps():
    h = PiecewiseSmooth.indicator(Fraction(1, 4), Fraction(3, 4))
    assert h.breakpoints == (Fraction(1, 4), Fraction(3, 4))
    assert h.left_limit(Fraction(1, 4)) == 0
    assert h.right_limit(Fraction(1, 4)) == 1
    assert h(HALF) == 1
    assert h(Fraction(1)) == 0
    assert jump_at(h, Fraction(1, 4)) == 1
    assert jump_at(h, Fraction(3, 4)) == -1
    assert jump_at(h, HALF) == 0
    assert h.jump_points() == [Fraction(1, 4), Fraction(3, 4)]
    with pytest.raises(OutOfDomain):
        jump_at(h, Fraction(0))


def test_arithmetic_normalizes():
    total = PiecewiseSmooth.indicator(0, HALF) + PiecewiseSmooth.indicator(HALF, 1)
    assert total == PiecewiseSmooth.constant(1)
    assert (x - x).is_zero
    assert (x * x).pieces == (Polynomial([0, 0, 1]),)
    assert (x * 2 + 1)(HALF) == 2
    assert (-x)(HALF) == -HALF
    assert x.max_degree == 1
    assert x.is_exact


def test_refined_keeps_values():
    h = PiecewiseSmooth.indicator(HALF, 1).refined([Fraction(1, 3), Fraction(2)])
    assert h.breakpoints == (Fraction(1, 3), HALF)
    assert h(Fraction(1, 4)) == 0 and h(Fraction(2, 5)) == 0 and h(Fraction(3, 4)) == 1
    assert h.normalized().breakpoints == (HALF,)


def test_derivative():
    h = PiecewiseSmooth((HALF,), (Polynomial([0, 0, 1]), Polynomial([1, 3])))
    assert h.derivative().pieces == (Polynomial([0, 2]), Polynomial([3]))
    assert h.derivative(0) is h
    assert h.derivative(3).is_zero


def test_start_jump_is_one_sided():
    h = PiecewiseSmooth.polynomial([1, 1])
    assert start_jump(h, Fraction(1), Side.LEFT) == -2
    assert start_jump(h, Fraction(0), Side.RIGHT) == 1
    assert start_jump(h, HALF, Side.LEFT) == -Fraction(3, 2)


def test_orbit_jump_uses_the_table(beta32_table):
    h = PiecewiseSmooth.polynomial([1, 1]) + PiecewiseSmooth.indicator(HALF, 1)
    assert orbit_jump(h, beta32_table, 0, 0) == -3
    assert orbit_jump(h, beta32_table, 0, 1) == 1
    assert orbit_jump(h, beta32_table, 0, 2) == 0


def test_decompose_derivative_tags_jumps(beta32_table):
    h = PiecewiseSmooth.indicator(HALF, 1) + PiecewiseSmooth.indicator(Fraction(2, 3), 1)
    smooth, jumps = decompose_derivative(h, beta32_table)
    assert smooth.is_zero
    assert jumps.as_dict() == {HALF: 1, Fraction(2, 3): 1}
    assert [e.tag for e in jumps] == [("a", 0, 1), ("b", 1)]
    assert jumps.untagged == []
    _, bare = decompose_derivative(h)
    assert len(bare.untagged) == 2


@pytest.mark.parametrize(
    "h, kind, r, expected",
    [
        (x, "L1", None, HALF),
        (x, "linf", None, 1),
        (PiecewiseSmooth.indicator(Fraction(1, 4), Fraction(3, 4)), "BV", None, Fraction(5, 2)),
        (x, "BV", None, Fraction(3, 2)),
        (x, "C_r", 1, 2),
        (PiecewiseSmooth.polynomial([0, 0, 1]), "continuous", 2, Fraction(1, 3) + 1 + 2),
    ],
)
def test_compute_norm(h, kind, r, expected):
    assert compute_norm(h, kind, r) == expected


def test_compute_norm_errors():
    with pytest.raises(ValueError):
        compute_norm(x, "sobolev")
    with pytest.raises(ValueError):
        compute_norm(x, "C_r")


def test_l1_of_enclosed_observable_is_an_enclosure():
    third = Enclosure.from_fraction(Fraction(1, 3))
    norm = compute_norm(PiecewiseSmooth.polynomial(Polynomial([third])), "L1")
    assert isinstance(norm, Enclosure)
    assert norm.contains(Fraction(1, 3))


def test_zeta_jump_norm_and_untagged(beta32_table):
    scheme = WeightScheme.uniform(beta32_table)
    h = PiecewiseSmooth.indicator(HALF, 1) * 3 + PiecewiseSmooth.indicator(Fraction(2, 3), 1)
    assert zeta_jump_norm(h, scheme, beta32_table) == 4
    with pytest.raises(UntaggedJump):
        zeta_jump_norm(PiecewiseSmooth.indicator(Fraction(1, 3), 1), scheme, beta32_table)


def test_zeta_weights_scale_the_jumps(beta32_table):
    zeta = {key: Fraction(5) for key in WeightScheme.uniform(beta32_table).zeta}
    scheme = WeightScheme(Fraction(1, 2), 2, zeta, beta32_table.depth)
    h = PiecewiseSmooth((HALF,), (Polynomial(), Polynomial([0, 1])))
    # jump 1/2 in h and 1 in its derivative, both at a_(0,1)
    assert jump_norm(h, scheme, beta32_table) == 5 * HALF + 5 * 1
    assert custom_norm(h, scheme, beta32_table) == continuous_norm(h, 2) + Fraction(15, 2)


def test_jump_tail_bound(beta32_table):
    assert jump_tail_bound(x, WeightScheme.uniform(beta32_table)) is None
    scheme = WeightScheme(HALF, 1, {}, 24)
    assert jump_tail_bound(x, scheme) == Fraction(1, 2**23)
