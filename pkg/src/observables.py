"""
Piecewise-polynomial observables with jumps, their derivative
decomposition, and the norms built on them.
"""
from __future__ import annotations

import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from src.errors import OutOfDomain, UntaggedJump
from src.map_core import Side
from src.numeric import Enclosure, is_exact, upper_bound
from src.polynomial import Polynomial, is_zero


@dataclass(frozen=True)
class PiecewiseSmooth:
    """
    Finitely many polynomial pieces on (0,1): pieces[i] lives between
    breakpoints[i-1] and breakpoints[i] (with 0 and 1 at the ends).
    """

    breakpoints: tuple = ()
    pieces: tuple = (Polynomial(),)
    error_bound: Fraction = Fraction(0)

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise ValueError(
                f"{len(self.breakpoints)} breakpoints need {len(self.breakpoints) + 1} pieces"
            )
        for a, b in zip((0,) + self.breakpoints, self.breakpoints + (1,)):
            if not a < b:
                raise ValueError(f"breakpoints must increase strictly inside (0,1): {a} !< {b}")

    @classmethod
    def constant(cls, c) -> "PiecewiseSmooth":
        return cls((), (Polynomial.constant(c),))

    @classmethod
    def zero(cls) -> "PiecewiseSmooth":
        return cls.constant(0)

    @classmethod
    def polynomial(cls, coeffs) -> "PiecewiseSmooth":
        poly = coeffs if isinstance(coeffs, Polynomial) else Polynomial(coeffs)
        return cls((), (poly,))

    @classmethod
    def indicator(cls, lo, hi, value=1) -> "PiecewiseSmooth":
        """value on (lo, hi), 0 elsewhere."""
        bps, pieces = [], []
        if lo > 0:
            bps.append(lo)
            pieces.append(Polynomial())
        pieces.append(Polynomial.constant(value))
        if hi < 1:
            bps.append(hi)
            pieces.append(Polynomial())
        return cls(tuple(bps), tuple(pieces))

    @classmethod
    def from_cells(cls, cells, error_bound=Fraction(0)) -> "PiecewiseSmooth":
        """From consecutive (lo, hi, poly) cells covering (0,1)."""
        bps = tuple(lo for lo, _, _ in cells[1:])
        return cls(bps, tuple(p for _, _, p in cells), error_bound).normalized()

    def cells(self) -> list:
        edges = (Fraction(0),) + self.breakpoints + (Fraction(1),)
        return [(edges[i], edges[i + 1], p) for i, p in enumerate(self.pieces)]

    def piece_index(self, x, side: Side) -> int:
        i = bisect_left(self.breakpoints, x)
        if i < len(self.breakpoints) and self.breakpoints[i] == x:
            return i if side is Side.LEFT else i + 1
        return i

    def left_limit(self, x):
        return self.pieces[self.piece_index(x, Side.LEFT)](x)

    def right_limit(self, x):
        return self.pieces[self.piece_index(x, Side.RIGHT)](x)

    def limit(self, x, side: Side):
        return self.left_limit(x) if side is Side.LEFT else self.right_limit(x)

    def __call__(self, x):
        return self.right_limit(x) if x < 1 else self.left_limit(x)

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.pieces)

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for p in self.pieces) and self.error_bound == 0

    @property
    def max_degree(self) -> int:
        return max(p.degree for p in self.pieces)

    def normalized(self) -> "PiecewiseSmooth":
        """Merges neighbouring pieces carrying the same polynomial."""
        bps, pieces = [], [self.pieces[0]]
        for bp, poly in zip(self.breakpoints, self.pieces[1:]):
            if poly == pieces[-1]:
                continue
            bps.append(bp)
            pieces.append(poly)
        return PiecewiseSmooth(tuple(bps), tuple(pieces), self.error_bound)

    def refined(self, points) -> "PiecewiseSmooth":
        """Same function with extra (redundant) breakpoints."""
        extra = [p for p in points if 0 < p < 1]
        bps = sorted(set(self.breakpoints) | set(extra))
        pieces = []
        for lo, hi in zip([Fraction(0)] + bps, bps + [Fraction(1)]):
            pieces.append(self.pieces[self.piece_index((lo + hi) / 2, Side.RIGHT)])
        return PiecewiseSmooth(tuple(bps), tuple(pieces), self.error_bound)

    def _combine(self, other: "PiecewiseSmooth", op) -> "PiecewiseSmooth":
        bps = sorted(set(self.breakpoints) | set(other.breakpoints))
        pieces = []
        for lo, hi in zip([Fraction(0)] + bps, bps + [Fraction(1)]):
            mid = (lo + hi) / 2
            pieces.append(op(self.pieces[self.piece_index(mid, Side.RIGHT)],
                             other.pieces[other.piece_index(mid, Side.RIGHT)]))
        return PiecewiseSmooth(tuple(bps), tuple(pieces), self.error_bound + other.error_bound).normalized()

    def __add__(self, other):
        if not isinstance(other, PiecewiseSmooth):
            other = PiecewiseSmooth.constant(other)
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, PiecewiseSmooth):
            other = PiecewiseSmooth.constant(other)
        return self._combine(other, lambda a, b: a - b)

    def __neg__(self):
        return PiecewiseSmooth(self.breakpoints, tuple(-p for p in self.pieces), self.error_bound)

    def __mul__(self, other):
        if isinstance(other, PiecewiseSmooth):
            bound = self.error_bound * other.sup_bound() + other.error_bound * self.sup_bound()
            out = self._combine(other, lambda a, b: a * b)
            return PiecewiseSmooth(out.breakpoints, out.pieces, bound)
        pieces = tuple(p * other for p in self.pieces)
        return PiecewiseSmooth(self.breakpoints, pieces, self.error_bound * abs(other)).normalized()

    __rmul__ = __mul__

    def sup_bound(self):
        return compute_norm(self, "Linf")

    def derivative(self, order: int = 1) -> "PiecewiseSmooth":
        """Absolutely continuous part D_a^order, piece by piece."""
        if order == 0:
            return self
        return PiecewiseSmooth(
            self.breakpoints, tuple(p.derivative(order) for p in self.pieces)
        ).normalized()

    def jump_points(self) -> list:
        """Breakpoints with a nonzero jump."""
        return [x for x in self.breakpoints if not is_zero(jump_at(self, x))]


@dataclass(frozen=True)
class JumpEntry:
    point: object
    jump: object
    tag: tuple | None = None


@dataclass(frozen=True)
class JumpVector:
    entries: tuple = ()

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict:
        return {e.point: e.jump for e in self.entries}

    @property
    def untagged(self) -> list:
        return [e for e in self.entries if e.tag is None]


@dataclass(frozen=True)
class WeightScheme:
    """zeta(j,k) for k = 0..K per orbit; finite-part points weigh 1."""

    Lambda_tilde: object
    r: int
    zeta: dict
    depth: int
    domination_constant: object = Fraction(1)
    notes: dict = field(default_factory=dict, compare=False)

    def weight_for(self, tag) -> object:
        if tag is None:
            return None
        if tag[0] == "b":
            return Fraction(1)
        if tag[0] == "a":
            return self.zeta[(tag[1], tag[2])]
        return None

    @classmethod
    def uniform(cls, table, r: int = 1) -> "WeightScheme":
        """zeta == 1: the jump norm becomes the plain sum of |jumps|."""
        zeta = {(o.index, k): Fraction(1) for o in table.infinite_orbits for k in range(table.depth + 1)}
        return cls(Fraction(1), r, zeta, table.depth)


def jump_at(h: PiecewiseSmooth, x):
    """J(h,x) = h(x+) - h(x-)."""
    if not 0 < x < 1:
        raise OutOfDomain(f"jump_at needs x in (0,1), got {x}", x=x)
    i = bisect_left(h.breakpoints, x)
    if i == len(h.breakpoints) or h.breakpoints[i] != x:
        return Fraction(0)
    return h.pieces[i + 1](x) - h.pieces[i](x)


def start_jump(h: PiecewiseSmooth, value, side: Side):
    """
    Jump of h at a one-sided discontinuity c^side on the disjoint union:
    h is read as 0 beyond the cut, so J = -h(c^-) or J = h(c^+).
    """
    if side is Side.LEFT:
        return -h.left_limit(value)
    return h.right_limit(value)


def orbit_jump(h: PiecewiseSmooth, table, j: int, k: int):
    """J(h, a_{j,k}); the start a_{j,0} uses the one-sided convention."""
    point = table.point(j, k)
    if k == 0:
        return start_jump(h, point.value, point.side)
    return jump_at(h, point.value)


def decompose_derivative(h: PiecewiseSmooth, table=None):
    """(D_a h, D_j h): piecewise derivative and the nonzero jumps with their orbit tags."""
    entries = []
    for x in h.breakpoints:
        j = jump_at(h, x)
        if is_zero(j):
            continue
        entries.append(JumpEntry(x, j, table.tag(x) if table is not None else None))
    return h.derivative(), JumpVector(tuple(entries))


def _gauss_legendre_abs(poly: Polynomial, lo, hi, panels: int = 32, nodes: int = 12) -> Enclosure:
    """Composite Gauss-Legendre quadrature of |p| for enclosed coefficients."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    coeffs = np.array([float(c) for c in poly.coeffs])
    a, b = float(lo), float(hi)

    def integrate(n_panels):
        edges = np.linspace(a, b, n_panels + 1)
        total = 0.0
        for p0, p1 in zip(edges[:-1], edges[1:]):
            t = 0.5 * (p1 - p0) * x + 0.5 * (p1 + p0)
            total += 0.5 * (p1 - p0) * float(np.dot(w, np.abs(np.polynomial.polynomial.polyval(t, coeffs))))
        return total

    fine, coarse = integrate(panels), integrate(panels // 2)
    coefficient_radius = sum(float(c.radius()) for c in poly.coeffs if isinstance(c, Enclosure))
    err = abs(fine - coarse) + coefficient_radius * (b - a) + 1e-15 * (b - a)
    return Enclosure.from_bounds(Fraction(fine) - Fraction(err), Fraction(fine) + Fraction(err))


def _l1(h: PiecewiseSmooth):
    total = Fraction(0)
    for lo, hi, p in h.cells():
        if p.is_exact and is_exact(lo) and is_exact(hi):
            total += p.integrate_abs(lo, hi)
        else:
            total = total + _gauss_legendre_abs(p, lo, hi)
    return total + h.error_bound


def _linf(h: PiecewiseSmooth):
    best = Fraction(0)
    for lo, hi, p in h.cells():
        value = p.sup_abs(lo, hi)
        if upper_bound(value) > upper_bound(best):
            best = value
    return best + h.error_bound


def interior_jumps(h: PiecewiseSmooth) -> list:
    return [jump_at(h, x) for x in h.breakpoints]


def continuous_norm(h: PiecewiseSmooth, r: int):
    """Continuous part of the custom norm: sum over t <= r of ||D_a^t h||_L1."""
    total = Fraction(0)
    g = h
    for _ in range(r + 1):
        total = total + _l1(g)
        g = g.derivative()
    return total


def compute_norm(h: PiecewiseSmooth, kind: str, r: int | None = None):
    kind = kind.upper() if kind.lower() in ("l1", "linf", "bv") else kind
    if kind == "L1":
        return _l1(h)
    if kind == "LINF":
        return _linf(h)
    if kind == "BV":
        return _l1(h) + _l1(h.derivative()) + sum((abs(j) for j in interior_jumps(h)), Fraction(0))
    if kind in ("C_r", "Cr"):
        if r is None:
            raise ValueError("the C_r norm needs r")
        return max((2 ** (r - k) * _linf(h.derivative(k)) for k in range(r + 1)), key=upper_bound)
    if kind == "continuous":
        if r is None:
            raise ValueError("the continuous norm needs r")
        return continuous_norm(h, r)
    raise ValueError(f"unknown norm kind '{kind}'")


def zeta_jump_norm(h: PiecewiseSmooth, scheme: WeightScheme, table):
    """sum_j sum_k zeta(j,k)|J(h,a_{j,k})| + sum_k |J(h,b_k)| over the truncated table."""
    total = Fraction(0)
    for x in h.breakpoints:
        j = jump_at(h, x)
        if is_zero(j):
            continue
        tag = table.tag(x)
        if tag is not None and tag[0] == "beyond":
            # depth K+1 belongs to the tail bound
            continue
        weight = scheme.weight_for(tag)
        if weight is None:
            raise UntaggedJump(f"h jumps by {j} at {x}, outside the truncated discontinuity set",
                               point=x, tag=tag)
        total = total + weight * abs(j)
    return total


def jump_norm(h: PiecewiseSmooth, scheme: WeightScheme, table, r: int | None = None):
    """Jump part of the custom norm: sum over t <= r-1 of ||D_a^t h||_{J_zeta}."""
    r = scheme.r if r is None else r
    total = Fraction(0)
    g = h
    for _ in range(r):
        total = total + zeta_jump_norm(g, scheme, table)
        g = g.derivative()
    return total


def custom_norm(h: PiecewiseSmooth, scheme: WeightScheme, table, r: int | None = None):
    r = scheme.r if r is None else r
    return continuous_norm(h, r) + jump_norm(h, scheme, table, r)


def jump_tail_bound(h: PiecewiseSmooth, scheme: WeightScheme):
    """C * sum_{k>K} Lambda~^k * 2||h||_Linf, the mass a depth-K truncation can miss."""
    lt = Fraction(scheme.Lambda_tilde)
    if lt >= 1:
        logging.warning("Lambda~ >= 1: the truncated jump sum has no geometric tail bound")
        return None
    tail = lt ** (scheme.depth + 1) / (1 - lt)
    return scheme.domination_constant * tail * 2 * _linf(h)
