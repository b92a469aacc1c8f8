from __future__ import annotations

from fractions import Fraction

import pytest

from src.bounds_examples import make_example_map
from src.map_core import PiecewiseMap
from src.orbits import discontinuity_orbits
from src.services.map_loader import beta_map, golden_beta_map, load_builtin, load_weight, two_orbit_map
from src.transfer import Weight

SHALLOW_DEPTH = 24


@pytest.fixture
def doubling():
    return load_builtin("doubling")


@pytest.fixture
def tent():
    return load_builtin("tent")


@pytest.fixture
def beta32():
    return beta_map(Fraction(3, 2))


@pytest.fixture
def beta32_table(beta32):
    return discontinuity_orbits(beta32, SHALLOW_DEPTH)


@pytest.fixture
def two_orbit():
    return two_orbit_map()


@pytest.fixture
def two_orbit_weight(two_orbit):
    return load_weight(two_orbit, "two-orbit")


@pytest.fixture
def golden():
    return golden_beta_map(256)


@pytest.fixture
def t10_interval():
    return make_example_map(10, "thue-morse", depth=16)


@pytest.fixture
def t10_exact():
    return make_example_map(10, "thue-morse", depth=16, mode="exact")


@pytest.fixture
def quadratic_branch_map():
    """2x on [0,1/2], 2x^2 - x on [1/2,1]."""
    return PiecewiseMap.from_breakpoints(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [[0, 2], [0, -1, 2]], name="quadratic"
    )


@pytest.fixture
def srb():
    return Weight.srb
