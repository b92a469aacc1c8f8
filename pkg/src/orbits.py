"""
Discontinuity orbits of a piecewise monotone map.

Every one-sided point of Gamma is iterated forward. Orbits that close up
(pre-periodic at the working depth) and prefixes that run into another
discontinuity orbit form the finite part {b_k}; the surviving orbits are
re-based so that a_{j,0} is their last visit to Gamma and indexed a_{j,k}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from src.errors import (
    NoAdjacentBranch,
    PointOnBoundary,
    PreconditionK0,
    TruncationTooShallow,
    UndecidableAtDepth,
    UndecidableSign,
    ZeroWeightOnOrbit,
)
from src.map_core import PiecewiseMap, Side, same_point
from src.numeric import Enclosure, certainly_distinct, format_scalar, is_exact, nth_root, sign

DEFAULT_DEPTH = 64
DEFAULT_TAIL_FRACTION = Fraction(1, 4)


@dataclass(frozen=True)
class OrbitPoint:
    value: object
    side: Side
    branch: int

    def label(self, in_gamma: bool = False) -> str:
        return f"{self.value}{self.side.symbol}" if in_gamma else f"{self.value}"


@dataclass(frozen=True)
class Orbit:
    index: int
    points: tuple
    overflow: OrbitPoint
    merged_starts: tuple = ()

    @property
    def start(self) -> OrbitPoint:
        return self.points[0]

    def __getitem__(self, k) -> OrbitPoint:
        return self.points[k]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class OrbitTable:
    depth: int
    finite_part: tuple
    infinite_orbits: tuple
    k0: int | None
    signs: tuple
    markov: bool
    status: str
    _tags: dict = field(default_factory=dict, compare=False, repr=False)
    _fuzzy_tags: list = field(default_factory=list, compare=False, repr=False)
    coincidence_width: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for i, b in enumerate(self.finite_part):
            self._register(b.value, ("b", i))
        for orbit in self.infinite_orbits:
            for k, a in enumerate(orbit.points):
                self._register(a.value, ("a", orbit.index, k))
            self._register(orbit.overflow.value, ("beyond", orbit.index, self.depth + 1))

    def _register(self, value, tag):
        if is_exact(value):
            self._tags.setdefault(value, tag)
        else:
            self._fuzzy_tags.append((value, tag))

    def tag(self, value):
        """("a", j, k), ("b", i), ("beyond", j, K+1) or None."""
        if is_exact(value):
            found = self._tags.get(value)
            if found is not None:
                return found
        for other, tag in self._fuzzy_tags:
            if same_point(value, other, self.coincidence_width):
                return tag
        return None

    def point(self, j: int, k: int) -> OrbitPoint:
        return self.infinite_orbits[j].points[k]

    def delta_points(self) -> list:
        points = list(self.finite_part)
        for orbit in self.infinite_orbits:
            points.extend(orbit.points)
        return points


class _PointIndex:
    """Value lookup with certified comparisons for enclosures."""

    def __init__(self, width=None):
        self.width = width
        self._exact = {}
        self._fuzzy = []

    def add(self, value, payload):
        if is_exact(value):
            self._exact.setdefault(value, []).append(payload)
        else:
            self._fuzzy.append((value, payload))

    def lookup(self, value) -> list:
        found = list(self._exact.get(value, [])) if is_exact(value) else []
        candidates = self._fuzzy if is_exact(value) else self._fuzzy + [
            (v, p) for v, ps in self._exact.items() for p in ps
        ]
        for other, payload in candidates:
            if certainly_distinct(value, other):
                continue
            if same_point(value, other, self.width):
                found.append(payload)
            else:
                raise UndecidableAtDepth(
                    f"cannot decide whether {value!r} and {other!r} coincide", value=value
                )
        return found


def step_point(map_: PiecewiseMap, point: OrbitPoint) -> OrbitPoint:
    try:
        value, side, _ = map_.step(point.value, point.side)
        try:
            branch = map_.branch_index_at(value, side)
        except NoAdjacentBranch:
            side = side.flipped
            branch = map_.branch_index_at(value, side)
    except UndecidableSign as exc:
        raise UndecidableAtDepth(f"orbit of {point.value!r} leaves the certified range: {exc}",
                                 point=point) from exc
    return OrbitPoint(value, side, branch)


def _side_key(map_: PiecewiseMap, point: OrbitPoint):
    return point.side if map_.in_gamma(point.value) else None


def _run(map_: PiecewiseMap, start: OrbitPoint, depth: int):
    """Iterates one start until it closes or has depth+1 points past its last Gamma visit."""
    points = [start]
    seen = _PointIndex(map_.coincidence_width)
    seen.add(start.value, (0, start.side))
    last_gamma = 0
    while len(points) - 1 < last_gamma + depth + 1:
        nxt = step_point(map_, points[-1])
        in_gamma = map_.in_gamma(nxt.value)
        for _, side in seen.lookup(nxt.value):
            if not in_gamma or side is nxt.side:
                return points, True, last_gamma
        points.append(nxt)
        seen.add(nxt.value, (len(points) - 1, nxt.side))
        if in_gamma:
            last_gamma = len(points) - 1
    return points, False, last_gamma


def discontinuity_orbits(map_: PiecewiseMap, depth: int = DEFAULT_DEPTH) -> OrbitTable:
    if depth < 1:
        raise ValueError("discontinuity_orbits needs depth >= 1")
    logging.info(f"Iterating discontinuity orbits of {map_.name} to depth {depth}...")
    starts = [OrbitPoint(c, side, map_.branch_index_at(c, side)) for c, side in map_.one_sided_gamma()]

    finite = []
    self_based = []
    for start in starts:
        points, closed, last_gamma = _run(map_, start, depth)
        if closed:
            finite.extend(points)
        elif last_gamma > 0:
            finite.extend(points[:last_gamma])
        else:
            self_based.append(points)

    arrivals = _PointIndex(map_.coincidence_width)
    for r, points in enumerate(self_based):
        for k, p in enumerate(points[1:], start=1):
            arrivals.add(p.value, (r, k))

    canonical = []
    for r, points in enumerate(self_based):
        dominated = False
        for k, p in enumerate(points[1:], start=1):
            for other, k_other in arrivals.lookup(p.value):
                if other == r:
                    continue
                if k_other < k or (k_other == k and other < r):
                    dominated = True
                    break
            if dominated:
                break
        if not dominated:
            canonical.append(r)

    orbit_index = _PointIndex(map_.coincidence_width)
    for r in canonical:
        for p in self_based[r]:
            orbit_index.add(p.value, r)

    merged = {r: [] for r in canonical}
    for r, points in enumerate(self_based):
        if r in canonical:
            continue
        for k, p in enumerate(points):
            owners = orbit_index.lookup(p.value)
            if owners and k > 0:
                merged[owners[0]].append(points[0])
                break
            finite.append(p)
        else:
            raise TruncationTooShallow(
                f"orbit of {points[0].label(True)} is neither canonical nor joins one by depth {depth}",
                depth=depth,
            )

    orbits = tuple(
        Orbit(j, tuple(self_based[r][: depth + 1]), self_based[r][depth + 1], tuple(merged[r]))
        for j, r in enumerate(canonical)
    )

    orbit_keys = _PointIndex(map_.coincidence_width)
    for orbit in orbits:
        for p in orbit.points + (orbit.overflow,):
            orbit_keys.add(p.value, _side_key(map_, p))
    finite_part = []
    finite_keys = _PointIndex(map_.coincidence_width)
    for p in finite:
        key = _side_key(map_, p)
        if key in orbit_keys.lookup(p.value) or key in finite_keys.lookup(p.value):
            continue
        finite_keys.add(p.value, key)
        finite_part.append(p)

    markov = not orbits
    status = "markov (all discontinuity orbits close up)" if markov else f"open at depth {depth}"
    table = OrbitTable(depth, tuple(finite_part), orbits, None, (), markov, status,
                       coincidence_width=map_.coincidence_width)
    if markov:
        logging.info(f"{map_.name}: Markov, {len(finite_part)} points in the finite part")
        return table

    signs = branch_signs(table, map_)
    try:
        k0 = find_k0(table, map_)
    except TruncationTooShallow as exc:
        logging.warning(f"k0 undetermined for {map_.name}: {exc}")
        k0 = None
    logging.info(
        f"{map_.name}: {len(orbits)} non-trivial discontinuity orbit(s), "
        f"{len(finite_part)} finite-part points, k0={k0}, {status}"
    )
    return OrbitTable(depth, tuple(finite_part), orbits, k0, signs, False, status,
                      coincidence_width=map_.coincidence_width)


def find_k0(table: OrbitTable, map_: PiecewiseMap) -> int:
    """
    Smallest k0 with T^-1(a_{j,k}) & Delta_K = {a_{j,k-1}} for every stored k >= k0.

    a_{j,k-1} -> a_{j,k} holds by construction and canonical orbits never share
    a point, so only the finite part can add a preimage. Those images are the
    only ones computed; orbit points are matched by their stored values.
    """
    if not table.infinite_orbits:
        raise PreconditionK0("k0 is undefined without a non-trivial discontinuity orbit")
    targets = _PointIndex(map_.coincidence_width)
    for orbit in table.infinite_orbits:
        for k in range(1, table.depth + 1):
            targets.add(orbit.points[k].value, (orbit.index, k))
    k0 = 1
    for b in table.finite_part:
        image = step_point(map_, b)
        for j, k in targets.lookup(image.value):
            logging.debug(f"{b.label(True)} also maps onto a_({j},{k})")
            k0 = max(k0, k + 1)
    if k0 > table.depth:
        raise TruncationTooShallow(
            f"the predecessor property still fails at depth {table.depth}", depth=table.depth
        )
    return k0


def branch_signs(table: OrbitTable, map_: PiecewiseMap) -> tuple:
    """gamma_k = orientation of the branch containing a_{j,k}."""
    signs = []
    for orbit in table.infinite_orbits:
        seq = []
        for k, p in enumerate(orbit.points):
            if k > 0 and map_.in_gamma(p.value):
                raise PointOnBoundary(f"a_({orbit.index},{k}) = {p.value} lies in Gamma", j=orbit.index, k=k)
            seq.append(map_.branches[p.branch].orientation)
        signs.append(tuple(seq))
    return tuple(signs)


@dataclass(frozen=True)
class LambdaEstimate:
    point: OrbitPoint
    orbit: int
    n_values: tuple
    partial_products: tuple
    lambda_inf_est: object
    lambda_sup_est: object
    cauchy_diagnostic: float
    window: tuple
    exact: bool
    zero_weight: bool = False


def orbit_weights(map_: PiecewiseMap, weight, start: OrbitPoint, count: int) -> list:
    """phi(a_0), ..., phi(a_{count-1}) along the orbit of a one-sided start."""
    values = []
    p = start
    for _ in range(count):
        values.append(weight.at(map_, p.value, p.side))
        p = step_point(map_, p)
    return values


def parse_range(spec) -> tuple:
    """'1..64' -> (1, ..., 64); lists and ranges pass through."""
    if isinstance(spec, str):
        if ".." in spec:
            lo, hi = spec.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(part) for part in spec.split(","))
    return tuple(int(n) for n in spec)


def _tail(n_values, tail_fraction) -> tuple:
    size = max(2, math.ceil(len(n_values) * tail_fraction))
    return tuple(n_values[-size:])


def _lower(x):
    return x.lower if isinstance(x, Enclosure) else x


def _upper(x):
    return x.upper if isinstance(x, Enclosure) else x


def lambda_bounds(map_: PiecewiseMap, weight, table: OrbitTable, j: int, n_range,
                  tail_fraction=DEFAULT_TAIL_FRACTION) -> LambdaEstimate:
    """
    Partial products |phi_n(a_{j,0})|^(1/n) and tail-window rate estimates:
    min and max over window pairs n1 < n2 of (P_n2 / P_n1)^(1/(n2 - n1)).
    """
    n_values = tuple(sorted(set(parse_range(n_range))))
    if len(n_values) < 2:
        raise ValueError("lambda_bounds needs at least two values of n")
    orbit = table.infinite_orbits[j]
    phis = orbit_weights(map_, weight, orbit.start, n_values[-1])
    products = [Fraction(1)]
    for k, phi in enumerate(phis):
        if sign(phi) == 0:
            raise ZeroWeightOnOrbit(
                f"weight vanishes at a_({j},{k}); the estimate is pinned to 0", j=j, k=k
            )
        products.append(products[-1] * abs(phi))
    partial = tuple(nth_root(products[n], n) for n in n_values)
    window = _tail(n_values, tail_fraction)
    rates = []
    for i, n1 in enumerate(window):
        for n2 in window[i + 1:]:
            # the segment product avoids dividing two enclosures
            segment = Fraction(1)
            for phi in phis[n1:n2]:
                segment = segment * abs(phi)
            rates.append(nth_root(segment, n2 - n1))
    tail_roots = [float(partial[n_values.index(n)]) for n in window]
    exact = all(is_exact(r) for r in rates)
    return LambdaEstimate(
        point=orbit.start,
        orbit=j,
        n_values=n_values,
        partial_products=partial,
        lambda_inf_est=min(rates, key=_lower),
        lambda_sup_est=max(rates, key=_upper),
        cauchy_diagnostic=max(tail_roots) - min(tail_roots),
        window=window,
        exact=exact,
    )


def lambda_overall(map_: PiecewiseMap, weight, n_range, table: OrbitTable | None = None,
                   depth: int = DEFAULT_DEPTH, tail_fraction=DEFAULT_TAIL_FRACTION):
    """(Lambda^inf, Lambda^sup) maximized over the non-trivial discontinuities; 0 if Markov."""
    table = table or discontinuity_orbits(map_, depth)
    if table.markov:
        return Fraction(0), Fraction(0)
    lows, highs = [], []
    for orbit in table.infinite_orbits:
        try:
            est = lambda_bounds(map_, weight, table, orbit.index, n_range, tail_fraction)
        except ZeroWeightOnOrbit as exc:
            logging.warning(str(exc))
            lows.append(Fraction(0))
            highs.append(Fraction(0))
            continue
        lows.append(est.lambda_inf_est)
        highs.append(est.lambda_sup_est)
    return max(lows, key=_lower), max(highs, key=_upper)


ORBIT_COLUMNS = ("j", "k", "point", "branch_index", "gamma", "phi_value")


def orbit_rows(table: OrbitTable, map_: PiecewiseMap, weight) -> list:
    """One row per orbit point; finite part rows use j = 'b'."""
    def point_text(p):
        side = p.side.symbol if map_.in_gamma(p.value) else ""
        return f"{format_scalar(p.value)}{side}"

    rows = []
    for orbit in table.infinite_orbits:
        for k, p in enumerate(orbit.points):
            rows.append(dict(zip(ORBIT_COLUMNS, (
                orbit.index, k, point_text(p), p.branch, table.signs[orbit.index][k],
                format_scalar(weight.at(map_, p.value, p.side)),
            ))))
    for i, p in enumerate(table.finite_part):
        rows.append(dict(zip(ORBIT_COLUMNS, (
            "b", i, point_text(p), p.branch, map_.branches[p.branch].orientation,
            format_scalar(weight.at(map_, p.value, p.side)),
        ))))
    return rows

