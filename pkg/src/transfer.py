"""
The weighted transfer operator on piecewise-polynomial observables.

(L h)(y) = sum over branches w of (phi h)(T|_w^-1 y) 1_{T w}(y). Affine
branches with polynomial weights are handled by exact composition; anything
else is interpolated at Chebyshev nodes and the error is carried in the
observable's error bound.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from src.errors import (
    ApproximationError,
    DegreeOverflow,
    InvalidMapSpec,
    PreconditionK0,
    WeightVanishes,
)
from src.map_core import Branch, Cell, PiecewiseMap, Side, refine_partition
from src.numeric import is_exact, lower_bound, upper_bound
from src.observables import PiecewiseSmooth, compute_norm, custom_norm, jump_at, orbit_jump
from src.polynomial import Polynomial, RationalFunction, is_zero

DEFAULT_DEGREE_BUDGET = 16
DEFAULT_APPROX_DEGREE = 12
DEFAULT_APPROX_TOLERANCE = Fraction(1, 10**8)


@dataclass(frozen=True)
class Weight:
    """phi as one rational function per branch of the map."""

    pieces: tuple
    mode: str = "custom"
    label: str = ""

    @classmethod
    def constant(cls, map_: PiecewiseMap, c) -> "Weight":
        c = Fraction(c) if is_exact(c) else c
        return cls(tuple(RationalFunction.of(c) for _ in map_.branches), "constant", f"constant:{c}")

    @classmethod
    def srb(cls, map_: PiecewiseMap) -> "Weight":
        """phi = 1/|T'|."""
        pieces = tuple(
            RationalFunction(Polynomial.constant(br.orientation), br.poly.derivative())
            for br in map_.branches
        )
        return cls(pieces, "inverse_derivative", "srb")

    inverse_derivative = srb

    @classmethod
    def custom(cls, map_: PiecewiseMap, pieces, label: str = "custom") -> "Weight":
        if len(pieces) != len(map_.branches):
            raise InvalidMapSpec(
                f"a custom weight needs one piece per branch ({len(map_.branches)}), got {len(pieces)}"
            )
        return cls(tuple(RationalFunction.of(p) for p in pieces), "custom", label)

    def piece(self, i: int) -> RationalFunction:
        return self.pieces[i]

    def at(self, map_: PiecewiseMap, x, side: Side):
        return self.pieces[map_.branch_index_at(x, Side(side))](x)

    @property
    def is_piecewise_constant(self) -> bool:
        return all(p.num.is_constant and p.den.is_constant for p in self.pieces)

    def constants(self) -> list:
        if not self.is_piecewise_constant:
            raise ValueError(f"weight {self.label} is not constant on branches")
        return [p.num.coeffs[0] / p.den.coeffs[0] for p in self.pieces]

    def check_nonvanishing(self, map_: PiecewiseMap):
        """inf |phi| > 0 on every branch closure."""
        for i, (br, phi) in enumerate(zip(map_.branches, self.pieces)):
            if phi.sign_on(br.lo, br.hi) == 0:
                raise WeightVanishes(
                    f"weight {self.label} vanishes (or cannot be bounded away from 0) on branch {i}",
                    branch=i,
                )


def _affine_inverse(F: Polynomial) -> Polynomial:
    c0, c1 = F.coeffs[0], F.coeffs[1]
    return Polynomial.affine(-c0 / c1, 1 / c1)


@dataclass(frozen=True)
class Source:
    """
    One monotone piece of T^n: (lo, hi) is carried onto its image by F and
    weighted by m. The image ends are the values the branch maps produce,
    so neighbouring pieces and orbit points agree on them exactly.
    """

    lo: object
    hi: object
    F: Polynomial
    orientation: int
    m: RationalFunction
    steps: tuple
    image_lo: object
    image_hi: object

    @classmethod
    def of_branch(cls, br: Branch, m) -> "Source":
        return cls(br.lo, br.hi, br.poly, br.orientation, RationalFunction.of(m), (br,), br(br.lo), br(br.hi))

    @classmethod
    def of_cell(cls, map_: PiecewiseMap, cell: Cell, m) -> "Source":
        ylo, yhi = cell.image_bounds()
        start, end = (ylo, yhi) if cell.orientation > 0 else (yhi, ylo)
        steps = tuple(map_.branches[i] for i in cell.word)
        return cls(cell.lo, cell.hi, cell.poly, cell.orientation, RationalFunction.of(m), steps, start, end)

    def image(self, x):
        if x is self.lo:
            return self.image_lo
        if x is self.hi:
            return self.image_hi
        for br in self.steps:
            x = br(x)
        return x


def _chebyshev_summand(F: Polynomial, x0, x1, y0, y1, g: RationalFunction, degree: int):
    """(g o F^-1) on F([x0,x1]) = [y0,y1] interpolated at Chebyshev nodes, with a sampled error bound."""
    lo, hi = (x0, x1)

    def value(y: float) -> float:
        x = F.solve_monotone(Fraction(y), lo, hi, tol=Fraction(1, 2**64))
        return float(g(x))

    def values(ys):
        return np.array([value(float(y)) for y in ys])

    domain = [float(y0), float(y1)]
    cheb = np.polynomial.Chebyshev.interpolate(values, degree, domain=domain)
    power = cheb.convert(kind=np.polynomial.Polynomial)
    samples = np.linspace(domain[0], domain[1], 4 * degree + 1)
    err = float(np.max(np.abs(values(samples) - power(samples))))
    poly = Polynomial([Fraction(float(c)) for c in power.coef])
    return poly, Fraction(2 * err + 1e-15)


def _summand(source: Source, x0, x1, g: RationalFunction, degree_budget: int, approx_degree: int):
    """(g o F^-1) 1_{F(x0,x1)} as (y0, y1, poly, error)."""
    ya, yb = source.image(x0), source.image(x1)
    y0, y1 = (ya, yb) if source.orientation > 0 else (yb, ya)
    F = source.F
    gp = g.as_polynomial()
    if F.degree <= 1 and gp is not None:
        if gp.degree > degree_budget:
            raise DegreeOverflow(
                f"summand degree {gp.degree} exceeds the budget of {degree_budget}", degree=gp.degree
            )
        return y0, y1, gp.compose(_affine_inverse(F)), Fraction(0)
    poly, err = _chebyshev_summand(F, x0, x1, y0, y1, g, approx_degree)
    return y0, y1, poly, err


def _restrict(h: PiecewiseSmooth, lo, hi):
    """Pieces of h cut to (lo, hi)."""
    for a, b, p in h.cells():
        x0 = a if a > lo else lo
        x1 = b if b < hi else hi
        if x0 < x1:
            yield x0, x1, p


def _assemble(summands, error_bound) -> PiecewiseSmooth:
    """Sums (y0, y1, poly) summands into one piecewise polynomial on (0,1)."""
    points = {Fraction(0), Fraction(1)}
    for y0, y1, _ in summands:
        points.add(y0)
        points.add(y1)
    edges = sorted(points)
    index = {y: i for i, y in enumerate(edges)}
    delta = [Polynomial() for _ in edges]
    for y0, y1, poly in summands:
        delta[index[y0]] = delta[index[y0]] + poly
        delta[index[y1]] = delta[index[y1]] - poly
    cells = []
    running = Polynomial()
    for i in range(len(edges) - 1):
        running = running + delta[i]
        cells.append((edges[i], edges[i + 1], running))
    return PiecewiseSmooth.from_cells(cells, error_bound)


def push_forward(sources, h: PiecewiseSmooth, degree_budget: int = DEFAULT_DEGREE_BUDGET,
                 approx_degree: int = DEFAULT_APPROX_DEGREE,
                 approx_tolerance=DEFAULT_APPROX_TOLERANCE) -> PiecewiseSmooth:
    """
    sum over sources of (m h) o F^-1 on F(lo, hi).
    F is monotone on each source interval, m a rational function there.
    """
    summands = []
    error = Fraction(0)
    for source in sources:
        m = source.m
        if h.error_bound:
            error += upper_bound(m.sup_abs(source.lo, source.hi)) * h.error_bound
        for x0, x1, p in _restrict(h, source.lo, source.hi):
            if p.is_zero or m.is_zero:
                continue
            y0, y1, poly, err = _summand(source, x0, x1, m * p, degree_budget, approx_degree)
            if err > approx_tolerance:
                raise ApproximationError(
                    f"interpolation error {float(err):.3e} exceeds {float(approx_tolerance):.3e}",
                    error=err,
                )
            error += err
            summands.append((y0, y1, poly))
    return _assemble(summands, error)


def branch_sources(map_: PiecewiseMap, multipliers) -> list:
    return [Source.of_branch(br, m) for br, m in zip(map_.branches, multipliers)]


def apply_transfer(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth, **options) -> PiecewiseSmooth:
    return push_forward(branch_sources(map_, weight.pieces), h, **options)


def _prefix_polys(map_: PiecewiseMap, word: tuple, cache: dict) -> list:
    """[T^0, T^1, ..., T^len(word)] along the word, as polynomials."""
    polys = cache.get(word)
    if polys is None:
        if not word:
            polys = [Polynomial.identity()]
        else:
            head = _prefix_polys(map_, word[:-1], cache)
            polys = head + [map_.branches[word[-1]].poly.compose(head[-1])]
        cache[word] = polys
    return polys


def weight_product(map_: PiecewiseMap, weight: Weight, word: tuple, cache: dict | None = None):
    """phi_n = prod_k phi o T^k on the cell of the word, as a rational function."""
    cache = {} if cache is None else cache
    polys = _prefix_polys(map_, word, cache)
    product = RationalFunction.of(1)
    for k, i in enumerate(word):
        product = product * weight.piece(i).compose(polys[k])
    return product


def cell_sources(map_: PiecewiseMap, weight: Weight, n: int, **partition_options) -> list:
    partition = refine_partition(map_, n, **partition_options)
    cache = {}
    return [Source.of_cell(map_, c, weight_product(map_, weight, c.word, cache)) for c in partition.cells]


def apply_transfer_n(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth, n: int,
                     method: str = "compose", **options) -> PiecewiseSmooth:
    """L^n h, either as n applications or directly over the cells of Omega_n."""
    if n < 0:
        raise ValueError("apply_transfer_n needs n >= 0")
    if n == 0:
        return h
    if method == "compose":
        for _ in range(n):
            h = apply_transfer(map_, weight, h, **options)
        return h
    if method == "direct":
        return push_forward(cell_sources(map_, weight, n), h, **options)
    raise ValueError(f"unknown method '{method}'")


def transfer_paths_agree(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth, n: int) -> bool:
    composed = apply_transfer_n(map_, weight, h, n, method="compose")
    direct = apply_transfer_n(map_, weight, h, n, method="direct")
    diff = composed - direct
    if composed.is_exact and direct.is_exact:
        return diff.is_zero
    if all(p.may_be_zero for p in diff.pieces):
        return True
    return lower_bound(compute_norm(diff, "Linf")) <= composed.error_bound + direct.error_bound


def random_piecewise_polynomial(map_: PiecewiseMap, rng, degree: int = 2) -> PiecewiseSmooth:
    """Random small-rational polynomial pieces on the branch domains."""
    pieces = []
    for _ in map_.branches:
        coeffs = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for _ in range(degree + 1)]
        pieces.append(Polynomial(coeffs))
    breakpoints = tuple(br.hi for br in map_.branches[:-1])
    return PiecewiseSmooth(breakpoints, tuple(pieces)).normalized()


def build_h_suite(map_: PiecewiseMap, weight: Weight, size: int, seed: int,
                  max_iterates: int = 3, degree: int = 2) -> list:
    """
    Observables sum_n c_n L^n p with p random on the branch domains: every jump
    sits on Gamma or on an image of Gamma.
    """
    rng = np.random.default_rng(seed)
    suite = []
    for _ in range(size):
        p = random_piecewise_polynomial(map_, rng, degree)
        iterates = int(rng.integers(0, max_iterates + 1))
        h = PiecewiseSmooth.zero()
        term = p
        for n in range(iterates + 1):
            c = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
            h = h + term * c
            if n < iterates:
                term = apply_transfer(map_, weight, term)
        suite.append(h)
    logging.info(f"Built an h-suite of {size} observables for {map_.name} (seed {seed})")
    return suite


@dataclass(frozen=True)
class ResidualReport:
    name: str
    residuals: dict
    max_residual: object
    tolerance: object = Fraction(0)
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return lower_bound(self.max_residual) <= self.tolerance


def verify_jump_shift(map_: PiecewiseMap, weight: Weight, table, h: PiecewiseSmooth, k_range,
                      j: int = 0) -> ResidualReport:
    """|J(Lh, a_k) - gamma_{k-1} phi(a_{k-1}) J(h, a_{k-1})| for k in k_range."""
    if table.k0 is None:
        raise PreconditionK0("k0 is not determined for this orbit table")
    Lh = apply_transfer(map_, weight, h)
    residuals = {}
    for k in k_range:
        if k < table.k0:
            raise PreconditionK0(f"k = {k} is below k0 = {table.k0}", k=k, k0=table.k0)
        if k > table.depth:
            raise ValueError(f"k = {k} exceeds the orbit depth {table.depth}")
        prev = table.point(j, k - 1)
        gamma = table.signs[j][k - 1]
        phi = weight.at(map_, prev.value, prev.side)
        lhs = jump_at(Lh, table.point(j, k).value)
        rhs = gamma * phi * orbit_jump(h, table, j, k - 1)
        residuals[k] = abs(lhs - rhs)
    tolerance = Lh.error_bound * 2
    worst = max(residuals.values(), default=Fraction(0), key=upper_bound)
    return ResidualReport("jump-shift", residuals, worst, tolerance)


def verify_derivative_identity(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth) -> ResidualReport:
    """D_a(L h) against L((phi'/(phi T')) h) + L((1/T') D_a h)."""
    weight.check_nonvanishing(map_)
    lhs = apply_transfer(map_, weight, h).derivative()
    # phi times the multipliers phi'/(phi T') and 1/T'
    first = [phi.derivative() / br.poly.derivative() for br, phi in zip(map_.branches, weight.pieces)]
    second = [phi / br.poly.derivative() for br, phi in zip(map_.branches, weight.pieces)]
    rhs = (push_forward(branch_sources(map_, first), h)
           + push_forward(branch_sources(map_, second), h.derivative()))
    residual = compute_norm(lhs - rhs, "Linf")
    return ResidualReport("derivative-identity", {"sup": residual}, residual,
                          lhs.error_bound + rhs.error_bound)


@dataclass(frozen=True)
class DistortionTable:
    n: int
    r: int
    cells: tuple
    A: dict
    B: dict
    sup_norms: dict
    closed_form_ok: bool
    b_matches_a: bool


def distortion_coefficients(map_: PiecewiseMap, weight: Weight, n: int, r: int) -> DistortionTable:
    """
    A_{l,p,n} per cell of Omega_n from
        A_{l,p+1} = (A_{l,p}' + A_{l,p} phi_n'/phi_n + A_{l-1,p}) / (T^n)'
    and, on affine cells, B_{l,p,n} = A_{l,p,n} o (T^n)^-1 from the matching
    recursion in the image variable.
    """
    weight.check_nonvanishing(map_)
    partition = refine_partition(map_, n)
    cache = {}
    log_derivs = [phi.derivative() / phi for phi in weight.pieces]
    A, B = {}, {}
    closed_form_ok, b_matches_a = True, True
    for c_index, cell in enumerate(partition.cells):
        polys = _prefix_polys(map_, cell.word, cache)
        dTn = RationalFunction.of(cell.poly.derivative())
        quotient = RationalFunction.of(0)
        for k, i in enumerate(cell.word):
            if log_derivs[i].is_zero:
                continue
            quotient = quotient + log_derivs[i].compose(polys[k]) * polys[k].derivative()
        A[(c_index, 0, 0)] = RationalFunction.of(1)
        for p in range(r):
            for l in range(p + 2):
                term = RationalFunction.of(0)
                if l <= p:
                    a = A[(c_index, l, p)]
                    term = term + a.derivative() + a * quotient
                if l >= 1:
                    term = term + A[(c_index, l - 1, p)]
                A[(c_index, l, p + 1)] = term / dTn
        for p in range(r + 1):
            if not (A[(c_index, p, p)] - dTn ** (-p)).may_be_zero:
                closed_form_ok = False
        if cell.is_affine:
            inverse = _affine_inverse(cell.poly)
            theta = RationalFunction.of(1) / dTn.compose(inverse)
            Phi = weight_product(map_, weight, cell.word, cache).compose(inverse)
            log_Phi = Phi.derivative() / Phi
            B[(c_index, 0, 0)] = RationalFunction.of(1)
            for p in range(r):
                for l in range(p + 2):
                    term = RationalFunction.of(0)
                    if l <= p:
                        b = B[(c_index, l, p)]
                        term = term + b.derivative() + b * log_Phi
                    if l >= 1:
                        term = term + B[(c_index, l - 1, p)] * theta
                    B[(c_index, l, p + 1)] = term
            for p in range(r + 1):
                for l in range(p + 1):
                    if not (B[(c_index, l, p)] - A[(c_index, l, p)].compose(inverse)).may_be_zero:
                        b_matches_a = False
    sup_norms = {}
    for (c_index, l, p), a in A.items():
        cell = partition.cells[c_index]
        value = a.sup_abs(cell.lo, cell.hi)
        if (l, p) not in sup_norms or upper_bound(value) > upper_bound(sup_norms[(l, p)]):
            sup_norms[(l, p)] = value
    if not closed_form_ok:
        logging.error(f"A_(p,p,{n}) differs from ((T^{n})')^-p on some cell of {map_.name}")
    return DistortionTable(n, r, partition.cells, A, B, sup_norms, closed_form_ok, b_matches_a)


def lemma_superDa_check(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth, n: int, p: int) -> ResidualReport:
    """D_a^p(L^n h) against sum_l L^n(A_{l,p,n} D_a^l h)."""
    lhs = apply_transfer_n(map_, weight, h, n).derivative(p)
    if n == 0:
        residual = compute_norm(lhs - h.derivative(p), "Linf")
        return ResidualReport("super-da", {"sup": residual}, residual, details={"n": n, "p": p})
    table = distortion_coefficients(map_, weight, n, p)
    cache = {}
    rhs = PiecewiseSmooth.zero()
    for l in range(p + 1):
        sources = []
        for c_index, cell in enumerate(table.cells):
            phi_n = weight_product(map_, weight, cell.word, cache)
            sources.append(Source.of_cell(map_, cell, phi_n * table.A[(c_index, l, p)]))
        rhs = rhs + push_forward(sources, h.derivative(l))
    residual = compute_norm(lhs - rhs, "Linf")
    a_sup = {l: table.sup_norms[(l, p)] for l in range(p + 1)}
    return ResidualReport("super-da", {"sup": residual}, residual, lhs.error_bound + rhs.error_bound,
                          details={"n": n, "p": p, "a_sup": a_sup, "closed_form_ok": table.closed_form_ok})


def l1_contraction_check(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth):
    """(||L h||_L1, ||phi |T'| h||_L1); the first never exceeds the second."""
    lhs = compute_norm(apply_transfer(map_, weight, h), "L1")
    cells = []
    for br, phi in zip(map_.branches, weight.pieces):
        m = (phi * RationalFunction.of(br.poly.derivative() * br.orientation)).as_polynomial()
        if m is None:
            raise ApproximationError(f"phi |T'| is not polynomial on the branch at {br.lo}")
        for x0, x1, p in _restrict(h, br.lo, br.hi):
            cells.append((x0, x1, m * p))
    rhs = compute_norm(PiecewiseSmooth.from_cells(cells, h.error_bound), "L1")
    return lhs, rhs


def linearity_check(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth, g: PiecewiseSmooth, alpha) -> bool:
    left = apply_transfer(map_, weight, h * alpha + g)
    right = apply_transfer(map_, weight, h) * alpha + apply_transfer(map_, weight, g)
    return (left - right).is_zero


def is_nonnegative(h: PiecewiseSmooth) -> bool:
    for lo, hi, p in h.cells():
        if p.is_zero:
            continue
        candidates = [lo, hi] + p.derivative().real_roots(lo, hi)
        if any(upper_bound(p(c)) < 0 for c in candidates):
            return False
    return True


def positivity_check(map_: PiecewiseMap, weight: Weight, h: PiecewiseSmooth) -> bool:
    """phi >= 0 and h >= 0 imply L h >= 0; vacuous when the premise fails."""
    phi_nonneg = all(phi.sign_on(br.lo, br.hi) > 0 or phi.is_zero
                     for br, phi in zip(map_.branches, weight.pieces))
    if not (phi_nonneg and is_nonnegative(h)):
        return True
    return is_nonnegative(apply_transfer(map_, weight, h))


def boundedness_constant(map_: PiecewiseMap, weight: Weight, scheme, table, suite) -> Fraction:
    """max over the suite of ||L h||_B / ||h||_B in the custom norm."""
    best = Fraction(0)
    for h in suite:
        denominator = custom_norm(h, scheme, table)
        if is_zero(denominator):
            continue
        ratio = custom_norm(apply_transfer(map_, weight, h), scheme, table) / denominator
        if upper_bound(ratio) > best:
            best = upper_bound(ratio)
    return best
