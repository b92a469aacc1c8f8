"""
Piecewise monotone interval maps with polynomial branches.

A map is an ordered tuple of branches on consecutive subintervals of [0,1].
Points of the partition boundary Gamma are one-sided: the disjoint-union
convention treats c^- and c^+ as different points, and every evaluation at
a breakpoint names the side it approaches from.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from src.errors import (
    DegreeOverflow,
    DepthTooLarge,
    InvalidMapSpec,
    NoAdjacentBranch,
    NonMaximalPartition,
    NotExpanding,
    OutOfDomain,
    RootIsolationFailure,
    UndecidableSign,
)
from src.numeric import (
    Enclosure,
    certainly_distinct,
    is_exact,
    lower_bound,
    nth_root,
    parse_scalar,
    radius,
    upper_bound,
)
from src.polynomial import Polynomial

DEFAULT_CELL_BUDGET = 200_000
DEFAULT_COMPOSITE_DEGREE = 64


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def flipped(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT

    @property
    def symbol(self) -> str:
        return "-" if self is Side.LEFT else "+"


def same_point(a, b, width=None) -> bool:
    """
    Certified equality; overlapping enclosures count as different unless both
    are narrower than width, in which case they are identified.
    """
    if a is b:
        return True
    if is_exact(a) and is_exact(b):
        return a == b
    if certainly_distinct(a, b):
        return False
    try:
        return a == b
    except UndecidableSign:
        return width is not None and radius(a) <= width and radius(b) <= width


@dataclass(frozen=True)
class Branch:
    lo: object
    hi: object
    poly: Polynomial
    orientation: int
    # same branch as a polynomial in x - lo; keeps T(lo) sharp for enclosed coefficients
    local: Polynomial | None = field(default=None, compare=False)

    @property
    def is_affine(self) -> bool:
        return self.poly.degree <= 1

    def __call__(self, x):
        value = self.local(x - self.lo) if self.local is not None else self.poly(x)
        if isinstance(value, Enclosure) and value.radius() == 0:
            return value.lower
        return value

    def image_bounds(self):
        a, b = self(self.lo), self(self.hi)
        return (a, b) if self.orientation > 0 else (b, a)


@dataclass(frozen=True)
class Preimage:
    x: object
    side: Side | None
    branch: int


@dataclass(frozen=True)
class Cell:
    lo: object
    hi: object
    word: tuple
    poly: Polynomial
    orientation: int
    # T^n(cell), lower end first
    ylo: object = None
    yhi: object = None

    @property
    def is_affine(self) -> bool:
        return self.poly.degree <= 1

    def image_bounds(self):
        if self.ylo is not None:
            return self.ylo, self.yhi
        a, b = self.poly(self.lo), self.poly(self.hi)
        return (a, b) if self.orientation > 0 else (b, a)


@dataclass(frozen=True)
class RefinedPartition:
    level: int
    cells: tuple

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class PiecewiseMap:
    branches: tuple
    name: str = "map"
    max_degree: int = 8
    notes: dict = field(default_factory=dict, compare=False, hash=False)
    # enclosures narrower than this that overlap are read as one point
    coincidence_width: object = field(default=None, compare=False)

    def __post_init__(self):
        self._validate()

    @classmethod
    def from_breakpoints(cls, breakpoints, polys, orientations=None, name="map", max_degree=8, notes=None,
                         coincidence_width=None):
        if len(breakpoints) != len(polys) + 1:
            raise InvalidMapSpec(
                f"{len(polys)} branches need {len(polys) + 1} breakpoints, got {len(breakpoints)}",
                breakpoints=breakpoints,
            )
        branches = []
        for i, poly in enumerate(polys):
            if not isinstance(poly, Polynomial):
                poly = Polynomial([parse_scalar(c) for c in poly])
            lo, hi = breakpoints[i], breakpoints[i + 1]
            if orientations is None:
                orientation = poly.derivative().sign_on(lo, hi)
            else:
                orientation = orientations[i]
            branches.append(Branch(lo, hi, poly, orientation))
        return cls(tuple(branches), name=name, max_degree=max_degree, notes=dict(notes or {}),
                   coincidence_width=coincidence_width)

    def _validate(self):
        if not self.branches:
            raise InvalidMapSpec("a map needs at least one branch")
        if not same_point(self.branches[0].lo, 0) or not same_point(self.branches[-1].hi, 1):
            raise InvalidMapSpec("branch domains must start at 0 and end at 1", name=self.name)
        for i, br in enumerate(self.branches):
            if not br.lo < br.hi:
                raise InvalidMapSpec(f"branch {i} has an empty domain", branch=i)
            if i + 1 < len(self.branches) and not same_point(br.hi, self.branches[i + 1].lo):
                raise InvalidMapSpec(f"branches {i} and {i + 1} are not contiguous", branch=i)
            if br.poly.degree > self.max_degree:
                raise InvalidMapSpec(
                    f"branch {i} has degree {br.poly.degree} > {self.max_degree}", branch=i
                )
            if br.orientation not in (1, -1):
                raise InvalidMapSpec(f"branch {i} orientation must be +1 or -1", branch=i)
            if br.poly.derivative().sign_on(br.lo, br.hi) != br.orientation:
                raise InvalidMapSpec(
                    f"branch {i} derivative does not keep sign {br.orientation} on its closed domain",
                    branch=i,
                )
            ilo, ihi = br.image_bounds()
            if (not self.same(ilo, 0) and ilo < 0) or (not self.same(ihi, 1) and ihi > 1):
                raise InvalidMapSpec(f"branch {i} does not map its closure into [0,1]", branch=i)
        for i in range(len(self.branches) - 1):
            left, right = self.branches[i], self.branches[i + 1]
            c = left.hi
            values_differ = certainly_distinct(left(c), right(c))
            slopes_differ = certainly_distinct(left.poly.derivative()(c), right.poly.derivative()(c))
            if not values_differ and not slopes_differ:
                raise NonMaximalPartition(
                    f"branches {i} and {i + 1} join smoothly at {c}; merge them", breakpoint=c
                )

    @property
    def breakpoints(self) -> tuple:
        return (self.branches[0].lo,) + tuple(br.hi for br in self.branches)

    @property
    def gamma(self) -> tuple:
        return self.breakpoints

    @property
    def is_affine(self) -> bool:
        return all(br.is_affine for br in self.branches)

    @property
    def is_exact(self) -> bool:
        return all(br.poly.is_exact and is_exact(br.lo) and is_exact(br.hi) for br in self.branches)

    def one_sided_gamma(self) -> list:
        """The points of Gamma as one-sided points, in order."""
        points = []
        for c in self.breakpoints:
            if not same_point(c, 0):
                points.append((c, Side.LEFT))
            if not same_point(c, 1):
                points.append((c, Side.RIGHT))
        return points

    def same(self, a, b) -> bool:
        return same_point(a, b, self.coincidence_width)

    def in_gamma(self, x) -> bool:
        return any(self.same(x, c) for c in self.breakpoints)

    def branch_index_at(self, x, side: Side) -> int:
        if (not self.same(x, 0) and x < 0) or (not self.same(x, 1) and x > 1):
            raise OutOfDomain(f"{x} is outside [0,1]", x=x)
        if side is Side.LEFT and self.same(x, 0):
            raise NoAdjacentBranch("0 has no branch on its left", x=x, side=side)
        if side is Side.RIGHT and self.same(x, 1):
            raise NoAdjacentBranch("1 has no branch on its right", x=x, side=side)
        for i, br in enumerate(self.branches):
            if self.same(x, br.hi):
                if side is Side.LEFT:
                    return i
                continue
            if self.same(x, br.lo):
                if side is Side.RIGHT:
                    return i
                continue
            if br.lo < x < br.hi:
                return i
        raise OutOfDomain(f"{x} is not located by any branch", x=x)

    def step(self, x, side: Side):
        """One-sided image of x: (T(x^side), side of the image, branch index)."""
        i = self.branch_index_at(x, side)
        br = self.branches[i]
        new_side = side if br.orientation > 0 else side.flipped
        return br(x), new_side, i

    def image_along(self, word: tuple, x):
        """T^n x for x in the cell of the word, one branch at a time."""
        for i in word:
            x = self.branches[i](x)
        return x


def evaluate_one_sided(map_: PiecewiseMap, x, side: Side):
    """lim T(x +- eps) taken through the branch adjacent on the given side."""
    i = map_.branch_index_at(x, Side(side))
    return map_.branches[i](x)


def derivative_one_sided(map_: PiecewiseMap, x, side: Side, order: int = 1):
    i = map_.branch_index_at(x, Side(side))
    return map_.branches[i].poly.derivative(order)(x)


def _pull_back(cell: Cell, y):
    """The x in the cell with T^n x = y; the ends of the cell image land on the cell ends."""
    ylo, yhi = cell.image_bounds()
    first, last = (cell.lo, cell.hi) if cell.orientation > 0 else (cell.hi, cell.lo)
    if same_point(y, ylo):
        return first
    if same_point(y, yhi):
        return last
    return cell.poly.solve_monotone(y, cell.lo, cell.hi)


def refine_partition(map_: PiecewiseMap, n: int, budget: int = DEFAULT_CELL_BUDGET,
                     degree_budget: int = DEFAULT_COMPOSITE_DEGREE) -> RefinedPartition:
    """
    All nonempty cells w_{i0} & T^-1 w_{i1} & ... & T^-(n-1) w_{i(n-1)}, each with
    the polynomial of T^n on it and its image under T^n.

    Image ends are produced by the branch maps themselves, so they carry the
    same values (and the same enclosures) as the orbit points of Gamma.
    """
    if n < 1:
        raise ValueError("refine_partition needs n >= 1")
    cells = [Cell(br.lo, br.hi, (i,), br.poly, br.orientation, *br.image_bounds())
             for i, br in enumerate(map_.branches)]
    for level in range(2, n + 1):
        refined = []
        for cell in cells:
            ylo, yhi = cell.image_bounds()
            children = []
            for j, br in enumerate(map_.branches):
                a = br.lo if br.lo > ylo else ylo
                b = br.hi if br.hi < yhi else yhi
                if not a < b:
                    continue
                xa, xb = _pull_back(cell, a), _pull_back(cell, b)
                if cell.orientation < 0:
                    xa, xb = xb, xa
                poly = br.poly.compose(cell.poly)
                if poly.degree > degree_budget:
                    raise DegreeOverflow(
                        f"T^{level} has degree {poly.degree} on cell {cell.word + (j,)}", n=level
                    )
                ta, tb = br(a), br(b)
                image = (ta, tb) if br.orientation > 0 else (tb, ta)
                children.append(Cell(xa, xb, cell.word + (j,), poly, cell.orientation * br.orientation, *image))
            if cell.orientation < 0:
                children.reverse()
            refined.extend(children)
            if len(refined) > budget:
                raise DepthTooLarge(
                    f"refined partition at level {level} exceeds the budget of {budget} cells",
                    n=level, budget=budget,
                )
        cells = refined
    logging.debug(f"Refined partition of {map_.name} at level {n}: {len(cells)} cells")
    return RefinedPartition(n, tuple(cells))


def preimages(map_: PiecewiseMap, y) -> list:
    """
    T^-1 y under the disjoint-union convention: one entry per branch whose
    closed image contains y; breakpoints carry the side they are reached from.
    """
    try:
        if y < 0 or y > 1:
            raise OutOfDomain(f"{y} is outside [0,1]", y=y)
        found = []
        for i, br in enumerate(map_.branches):
            ilo, ihi = br.image_bounds()
            if not (map_.same(y, ilo) or map_.same(y, ihi)) and (y < ilo or y > ihi):
                continue
            x = br.poly.solve_monotone(y, br.lo, br.hi)
            if map_.same(x, br.lo):
                side = Side.RIGHT
            elif map_.same(x, br.hi):
                side = Side.LEFT
            else:
                side = None
            found.append(Preimage(x, side, i))
    except UndecidableSign as exc:
        raise RootIsolationFailure(
            f"cannot isolate the preimages of {y} on {map_.name}: {exc}", y=y
        ) from exc
    return found


def inf_abs_derivative(cell: Cell):
    d = cell.poly.derivative()
    if d.is_constant:
        return abs(d.coeffs[0])
    candidates = [cell.lo, cell.hi] + d.derivative().real_roots(cell.lo, cell.hi)
    return min((abs(d(c)) for c in candidates), key=lower_bound)


def check_uniform_expansion(map_: PiecewiseMap, n_max: int, budget: int = DEFAULT_CELL_BUDGET):
    """
    Best (C, lam) with |(T^n)'| >= C lam^-n on every cell for n <= n_max.
    Raises NotExpanding if inf |(T^n_max)'| <= 1 on some cell.
    """
    if n_max < 1:
        raise ValueError("check_uniform_expansion needs n_max >= 1")
    minima = []
    worst_cell = None
    for n in range(1, n_max + 1):
        partition = refine_partition(map_, n, budget)
        m_n = None
        for cell in partition.cells:
            value = lower_bound(inf_abs_derivative(cell))
            if m_n is None or value < m_n:
                m_n, worst_cell = value, cell
        minima.append(m_n)
    if not minima[-1] > 1:
        raise NotExpanding(
            f"|(T^{n_max})'| = {minima[-1]} <= 1 on cell {worst_cell.word}", cell=worst_cell, n=n_max
        )
    n0 = next(n for n, m in enumerate(minima, start=1) if m > 1)
    lam = upper_bound(nth_root(1 / minima[n0 - 1], n0))
    C = min(m * lam**n for n, m in enumerate(minima, start=1))
    logging.info(f"Uniform expansion of {map_.name}: C={C}, lambda={lam}")
    return C, lam
