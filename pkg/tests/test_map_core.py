from __future__ import annotations

from fractions import Fraction

import pytest

from src.errors import (
    DepthTooLarge,
    InvalidMapSpec,
    NoAdjacentBranch,
    NonMaximalPartition,
    NotExpanding,
    OutOfDomain,
    RootIsolationFailure,
)
from src.map_core import (
    PiecewiseMap,
    Side,
    check_uniform_expansion,
    derivative_one_sided,
    evaluate_one_sided,
    preimages,
    refine_partition,
    same_point,
)
from src.numeric import Enclosure

HALF = Fraction(1, 2)


def test_step_is_one_sided_at_breakpoints(doubling):
    assert doubling.step(HALF, Side.LEFT) == (1, Side.LEFT, 0)
    assert doubling.step(HALF, Side.RIGHT) == (0, Side.RIGHT, 1)


def test_decreasing_branch_flips_side(tent):
    value, side, branch = tent.step(HALF, Side.RIGHT)
    assert (value, side, branch) == (1, Side.LEFT, 1)


def test_branch_index_edges(doubling):
    assert doubling.branch_index_at(Fraction(1, 4), Side.LEFT) == 0
    assert doubling.branch_index_at(HALF, Side.LEFT) == 0
    assert doubling.branch_index_at(HALF, Side.RIGHT) == 1
    with pytest.raises(NoAdjacentBranch):
        doubling.branch_index_at(Fraction(0), Side.LEFT)
    with pytest.raises(NoAdjacentBranch):
        doubling.branch_index_at(Fraction(1), Side.RIGHT)
    with pytest.raises(OutOfDomain):
        doubling.branch_index_at(Fraction(3, 2), Side.LEFT)


def test_one_sided_gamma(doubling):
    assert doubling.one_sided_gamma() == [
        (0, Side.RIGHT), (HALF, Side.LEFT), (HALF, Side.RIGHT), (1, Side.LEFT),
    ]
    assert doubling.in_gamma(HALF)
    assert not doubling.in_gamma(Fraction(1, 3))


def test_one_sided_evaluation(doubling, tent):
    assert evaluate_one_sided(doubling, HALF, "left") == 1
    assert evaluate_one_sided(doubling, HALF, "right") == 0
    assert derivative_one_sided(tent, HALF, Side.LEFT) == 2
    assert derivative_one_sided(tent, HALF, Side.RIGHT) == -2


@pytest.mark.parametrize(
    "breakpoints, polys, orientations",
    [
        ([0, HALF, 1], [[0, 2]], None),  # breakpoint count
        ([0, 1], [[0, 3]], [1]),  # image leaves [0,1]
        ([0, 1], [[0, 4, -4]], [1]),  # not monotone on the closed domain
        ([0, HALF, 1], [[0, 2], [-1, 2]], [1, -1]),  # wrong orientation
        ([Fraction(1, 4), 1], [[0, 1]], [1]),  # does not start at 0
    ],
)
def test_invalid_maps(breakpoints, polys, orientations):
    with pytest.raises(InvalidMapSpec):
        PiecewiseMap.from_breakpoints([Fraction(b) for b in breakpoints], polys, orientations)


def test_degree_cap():
    with pytest.raises(InvalidMapSpec):
        PiecewiseMap.from_breakpoints([Fraction(0), Fraction(1)], [[0, 0, 1]], [1], max_degree=1)


def test_smooth_join_is_not_maximal():
    with pytest.raises(NonMaximalPartition):
        PiecewiseMap.from_breakpoints([Fraction(0), HALF, Fraction(1)], [[0, 1], [0, 1]], [1, 1])


def test_refine_partition_doubling(doubling):
    partition = refine_partition(doubling, 3)
    assert len(partition) == 8
    assert partition.cells[0].word == (0, 0, 0)
    assert partition.cells[5].word == (1, 0, 1)
    assert partition.cells[5].lo == Fraction(5, 8)
    assert partition.cells[5].hi == Fraction(6, 8)
    assert partition.cells[0].poly.coeffs[1] == 8


def test_refine_partition_keeps_cells_ordered_for_decreasing_branches(tent):
    partition = refine_partition(tent, 2)
    assert [c.lo for c in partition.cells] == [0, Fraction(1, 4), HALF, Fraction(3, 4)]
    assert [c.orientation for c in partition.cells] == [1, -1, 1, -1]
    assert all(abs(c.poly.derivative()(c.lo)) == 4 for c in partition.cells)


def test_refine_partition_budget(doubling):
    with pytest.raises(DepthTooLarge):
        refine_partition(doubling, 6, budget=10)


def test_preimages_carry_sides(doubling):
    interior = preimages(doubling, HALF)
    assert [(p.x, p.side, p.branch) for p in interior] == [(Fraction(1, 4), None, 0), (Fraction(3, 4), None, 1)]
    at_zero = preimages(doubling, Fraction(0))
    assert [(p.x, p.side) for p in at_zero] == [(0, Side.RIGHT), (HALF, Side.RIGHT)]
    at_one = preimages(doubling, Fraction(1))
    assert [(p.x, p.side) for p in at_one] == [(HALF, Side.LEFT), (1, Side.LEFT)]
    with pytest.raises(OutOfDomain):
        preimages(doubling, Fraction(2))


def test_uniform_expansion(doubling):
    assert check_uniform_expansion(doubling, 3) == (1, HALF)


def test_identity_is_not_expanding():
    identity = PiecewiseMap.from_breakpoints([Fraction(0), Fraction(1)], [[0, 1]], [1])
    with pytest.raises(NotExpanding):
        check_uniform_expansion(identity, 2)


def test_same_point_with_coincidence_width():
    wide = Enclosure.from_bounds(0, 1)
    narrow = Enclosure.from_bounds(Fraction(1, 4), Fraction(3, 4))
    assert same_point(HALF, HALF)
    assert not same_point(HALF, Fraction(1, 3))
    assert not same_point(wide, narrow)
    assert same_point(wide, narrow, width=Fraction(1))
    assert same_point(wide, wide)


def test_golden_map_closes_up_to_the_coincidence_width(golden):
    c = golden.breakpoints[1]
    assert isinstance(c, Enclosure)
    assert golden.coincidence_width == Fraction(1, 2**128)
    value, side, branch = golden.step(c, Side.LEFT)
    assert (side, branch) == (Side.LEFT, 0)
    assert golden.same(value, 1)
    value, side, branch = golden.step(c, Side.RIGHT)
    assert (side, branch) == (Side.RIGHT, 1)
    assert golden.same(value, 0)
    assert not golden.is_exact


def test_refine_partition_of_interval_example(t10_interval):
    map_ = t10_interval.map
    level_one = refine_partition(map_, 1)
    last = level_one.cells[-1]
    assert last.image_bounds() == (0, map_.branches[3](Fraction(1)))
    partition = refine_partition(map_, 2)
    assert partition.cells[0].lo == 0 and partition.cells[-1].hi == 1
    assert all(same_point(left.hi, right.lo) for left, right in zip(partition.cells, partition.cells[1:]))


def test_uniform_expansion_of_interval_example(t10_interval):
    assert check_uniform_expansion(t10_interval.map, 3) == (1, Fraction(7, 10))


def test_undecidable_preimage_raises_root_isolation(doubling):
    with pytest.raises(RootIsolationFailure):
        preimages(doubling, Enclosure.from_bounds(Fraction(-1, 8), Fraction(1, 8)))
