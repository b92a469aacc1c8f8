"""
Eigen-functionals of the dual of M = L - K along one discontinuity orbit.

For |lam| < Lambda^inf the functional
    ell_lam(h) = sum_{k >= k0} lam^k alpha_k J(h, a_k)
satisfies ell_lam(L h - K h) = lam ell_lam(h), where K is the rank-one
correction h -> alpha_{k0}^-1 J(h, a_{k0-1}) h_K. Everything here is
evaluated on the truncated orbit table with an explicit tail bound.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from src.errors import (
    LambdaTooLarge,
    NoGammaPreimage,
    NormalizationZero,
    PreconditionK0,
    UntaggedJump,
    ZeroWeight,
)
from src.map_core import PiecewiseMap, Side, refine_partition, same_point
from src.numeric import Enclosure, is_exact, lower_bound, nth_root, sign, upper_bound
from src.observables import PiecewiseSmooth, compute_norm, jump_at, orbit_jump
from src.orbits import step_point
from src.polynomial import Polynomial, is_zero
from src.transfer import Weight, apply_transfer, apply_transfer_n

GRID_POINTS_PER_RAY = 8
GRID_SCALE = Fraction(9, 10)
MAX_BUMP_RETRIES = 64


@dataclass(frozen=True)
class ComplexScalar:
    re: object = Fraction(0)
    im: object = Fraction(0)

    @classmethod
    def of(cls, value) -> "ComplexScalar":
        if isinstance(value, ComplexScalar):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(value, Fraction(0))

    def __add__(self, other):
        o = ComplexScalar.of(other)
        return ComplexScalar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexScalar(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-ComplexScalar.of(other))

    def __mul__(self, other):
        o = ComplexScalar.of(other)
        return ComplexScalar(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result, base = ComplexScalar(Fraction(1)), self
        while n > 0:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    @property
    def is_zero(self) -> bool:
        return is_zero(self.re) and is_zero(self.im)

    def modulus(self):
        if is_zero(self.im):
            return abs(self.re)
        if is_zero(self.re):
            return abs(self.im)
        return nth_root(self.re * self.re + self.im * self.im, 2)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if is_zero(self.im):
            return str(self.re)
        return f"{self.re}{'+' if sign(self.im) >= 0 else '-'}{abs(self.im)}i"


@dataclass(frozen=True)
class AlphaSequence:
    j: int
    k0: int
    values: dict

    def __getitem__(self, k):
        return self.values[k]

    @property
    def depth(self) -> int:
        return max(self.values)


def alpha_sequence(map_: PiecewiseMap, table, weight: Weight, j: int = 0, K: int | None = None) -> AlphaSequence:
    """alpha_{k0-1} = 1 and alpha_k = (gamma_{k-1} / phi(a_{k-1})) alpha_{k-1}."""
    if table.k0 is None:
        raise PreconditionK0("alpha needs k0")
    K = table.depth if K is None else min(K, table.depth)
    k0 = table.k0
    values = {k0 - 1: Fraction(1)}
    modulus = Fraction(1)
    for k in range(k0, K + 1):
        prev = table.point(j, k - 1)
        phi = weight.at(map_, prev.value, prev.side)
        if sign(phi) == 0:
            raise ZeroWeight(
                f"phi vanishes at a_({j},{k - 1}); Lambda^inf = 0 and the bound is trivial", j=j, k=k - 1
            )
        values[k] = table.signs[j][k - 1] / phi * values[k - 1]
        modulus = modulus / abs(phi)
        if is_exact(modulus) and abs(values[k]) != modulus:
            raise ArithmeticError(f"|alpha_{k}| disagrees with the direct weight product")
    return AlphaSequence(j, k0, values)


@dataclass(frozen=True)
class DualFunctional:
    lam: ComplexScalar
    j: int
    k0: int
    K: int
    coefficients: dict
    tail_ratio: object
    lambda_inf_est: object

    def tail_factor(self):
        """sum over k > K of |lam^k alpha_k|, bounded geometrically."""
        if self.tail_ratio is None:
            return None
        last = self.coefficients[self.K].modulus()
        return last * self.tail_ratio / (1 - self.tail_ratio)


def _tail_ratio(map_: PiecewiseMap, table, weight: Weight, j: int, lam_modulus):
    depth = table.depth
    start = max(table.k0, depth - max(2, depth // 4))
    worst = Fraction(0)
    for k in range(start, depth + 1):
        p = table.point(j, k)
        value = 1 / abs(weight.at(map_, p.value, p.side))
        if isinstance(value, Enclosure):
            value = value.upper
        worst = max(worst, value)
    ratio = lam_modulus * worst
    if ratio >= 1:
        logging.warning(f"tail ratio {float(ratio):.4g} >= 1: ell_lambda has no geometric tail bound")
        return None
    return ratio


def dual_functional(map_: PiecewiseMap, table, weight: Weight, alpha: AlphaSequence, lam,
                    lambda_inf_est) -> DualFunctional:
    lam = ComplexScalar.of(lam)
    modulus = lam.modulus()
    if not modulus < lambda_inf_est:
        raise LambdaTooLarge(f"|lambda| = {modulus} is not below Lambda^inf = {lambda_inf_est}",
                             lam=lam)
    K = alpha.depth
    coefficients = {k: lam ** k * alpha[k] for k in range(alpha.k0, K + 1)}
    ratio = _tail_ratio(map_, table, weight, alpha.j, upper_bound(modulus))
    return DualFunctional(lam, alpha.j, alpha.k0, K, coefficients, ratio, lambda_inf_est)


def ell_lambda(f: DualFunctional, h: PiecewiseSmooth, table):
    """(truncated ell_lam(h), tail bound)."""
    value = ComplexScalar()
    for x in h.breakpoints:
        jump = jump_at(h, x)
        if is_zero(jump):
            continue
        tag = table.tag(x)
        if tag is None:
            raise UntaggedJump(f"h jumps by {jump} at {x}, outside the orbit table", point=x)
        if tag[0] == "a" and tag[1] == f.j and f.k0 <= tag[2] <= f.K:
            value = value + f.coefficients[tag[2]] * jump
    factor = f.tail_factor()
    tail = None if factor is None else 2 * compute_norm(h, "Linf") * factor
    return value, tail


@dataclass(frozen=True)
class RankOneData:
    h_K: PiecewiseSmooth
    j: int
    k0: int
    pivot: object
    normalizer: object
    support: tuple


def _on_interval(lo, hi, poly: Polynomial) -> PiecewiseSmooth:
    bps, pieces = [], []
    if lo > 0:
        bps.append(lo)
        pieces.append(Polynomial())
    pieces.append(poly)
    if hi < 1:
        bps.append(hi)
        pieces.append(Polynomial())
    return PiecewiseSmooth(tuple(bps), tuple(pieces))


def construct_h_K(map_: PiecewiseMap, weight: Weight, table, j: int = 0) -> RankOneData:
    """
    h_K = L^{k0} h_0 / J(L^{k0} h_0, a_{k0}) with h_0 a quadratic bump on the
    Omega_{k0} cell next to the Gamma start of the orbit.
    """
    k0 = table.k0
    if k0 is None:
        raise PreconditionK0("h_K needs k0")
    start = table.point(j, 0)
    target = table.point(j, k0)
    reached = start
    for _ in range(k0):
        reached = step_point(map_, reached)
    if not same_point(reached.value, target.value):
        raise NoGammaPreimage(f"T^{k0}({start.label(True)}) does not reach a_({j},{k0})", j=j)

    partition = refine_partition(map_, k0)
    g = start.value
    if start.side is Side.LEFT:
        cell = next(c for c in partition.cells if same_point(c.hi, g))
        e = cell.lo
    else:
        cell = next(c for c in partition.cells if same_point(c.lo, g))
        e = cell.hi
    for attempt in range(MAX_BUMP_RETRIES):
        h0 = _on_interval(*sorted((e, g)), _bump_poly(g, e))
        h = apply_transfer_n(map_, weight, h0, k0)
        jump = jump_at(h, target.value)
        if not is_zero(jump):
            break
        logging.warning(f"bump on [{e}, {g}] gives no jump at a_({j},{k0}); shrinking (attempt {attempt + 1})")
        e = (e + g) / 2
    else:
        raise NormalizationZero(f"no bump near {g} produces a jump at a_({j},{k0})", j=j)
    h_K = h * (1 / jump)

    alpha = alpha_sequence(map_, table, weight, j, k0)
    for k in range(k0 + 1, table.depth + 1):
        if not is_zero(jump_at(h_K, table.point(j, k).value)):
            raise NormalizationZero(f"h_K jumps at a_({j},{k}) beyond the pivot", j=j, k=k)
    return RankOneData(h_K, j, k0, table.point(j, k0 - 1), 1 / alpha[k0], tuple(sorted((e, g))))


def _bump_poly(g, e) -> Polynomial:
    t = Polynomial.affine(-e / (g - e), 1 / (g - e))
    return t * t


def apply_K(data: RankOneData, h: PiecewiseSmooth, table) -> PiecewiseSmooth:
    """K h = alpha_{k0}^-1 J(h, a_{k0-1}) h_K."""
    return data.h_K * (data.normalizer * orbit_jump(h, table, data.j, data.k0 - 1))


@dataclass(frozen=True)
class CertificateRow:
    lam: ComplexScalar
    residual: object
    tail_bound: object
    verdict: str


def dual_eigen_residual(map_: PiecewiseMap, weight: Weight, data: RankOneData, f: DualFunctional,
                        h: PiecewiseSmooth, table, Mh: PiecewiseSmooth | None = None) -> CertificateRow:
    """|ell_lam(L h - K h) - lam ell_lam(h)| against the combined truncation tail."""
    if not f.lam.modulus() < f.lambda_inf_est:
        raise LambdaTooLarge(f"|lambda| is not below {f.lambda_inf_est}", lam=f.lam)
    if Mh is None:
        Mh = apply_transfer(map_, weight, h) - apply_K(data, h, table)
    left, left_tail = ell_lambda(f, Mh, table)
    right, right_tail = ell_lambda(f, h, table)
    diff = left - f.lam * right
    if left_tail is None or right_tail is None:
        tail = None
    else:
        tail = left_tail + f.lam.modulus() * right_tail
    if diff.is_zero:
        return CertificateRow(f.lam, Fraction(0), tail, "exact")
    residual = diff.modulus()
    if tail is not None and lower_bound(residual) <= upper_bound(tail):
        return CertificateRow(f.lam, residual, tail, "within-tail")
    return CertificateRow(f.lam, residual, tail, "fail")


def lambda_grid(lambda_inf_est, points: int = GRID_POINTS_PER_RAY, scale=GRID_SCALE) -> list:
    """points radii on each of the rays 1, i, -1, -i inside scale * Lambda^inf."""
    radius = lower_bound(lambda_inf_est)
    grid = []
    for ray in (ComplexScalar(1), ComplexScalar(0, 1), ComplexScalar(-1), ComplexScalar(0, -1)):
        for i in range(1, points + 1):
            grid.append(ray * (Fraction(i, points) * scale * radius))
    return grid


def certify_grid(map_: PiecewiseMap, weight: Weight, table, suite, lambda_inf_est, j: int = 0) -> list:
    """One CertificateRow per grid point, worst case over the suite."""
    data = construct_h_K(map_, weight, table, j)
    alpha = alpha_sequence(map_, table, weight, j)
    images = [apply_transfer(map_, weight, h) - apply_K(data, h, table) for h in suite]
    rows = []
    for lam in lambda_grid(lambda_inf_est):
        f = dual_functional(map_, table, weight, alpha, lam, lambda_inf_est)
        worst = None
        for h, Mh in zip(suite, images):
            row = dual_eigen_residual(map_, weight, data, f, h, table, Mh)
            if worst is None or _rank(row) > _rank(worst):
                worst = row
        rows.append(worst)
    failed = sum(1 for row in rows if row.verdict == "fail")
    logging.info(f"Dual certificate on {len(rows)} grid points: {failed} failure(s)")
    return rows


def _rank(row: CertificateRow):
    order = {"exact": 0, "within-tail": 1, "fail": 2}
    return order[row.verdict], float(row.residual)


def jump_depth(h: PiecewiseSmooth, table, j: int = 0) -> int:
    """Largest k with a jump of h at a_{j,k}; -1 when there is none."""
    depth = -1
    for x in h.jump_points():
        tag = table.tag(x)
        if tag is not None and tag[0] == "a" and tag[1] == j:
            depth = max(depth, tag[2])
    return depth


def certified_radius(rows):
    """Largest |lam| on the grid whose certificate did not fail."""
    return max((row.lam.modulus() for row in rows if row.verdict != "fail"), default=Fraction(0), key=upper_bound)
