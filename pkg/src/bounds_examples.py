"""
Essential-radius estimates, the family T_{m,rho} with a prescribed
non-trivial discontinuity, zeta weights and Lasota-Yorke measurements.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from src.errors import (
    GapBelowBound,
    LambdaTildeTooSmall,
    PeriodicItinerary,
    PrecisionInsufficient,
    UndecidableAtDepth,
)
from src.map_core import Branch, PiecewiseMap, inf_abs_derivative, refine_partition
from src.numeric import DEFAULT_BITS, Enclosure, nth_root, sign
from src.observables import (
    PiecewiseSmooth,
    WeightScheme,
    compute_norm,
    continuous_norm,
    jump_at,
)
from src.orbits import (
    DEFAULT_DEPTH,
    discontinuity_orbits,
    lambda_overall,
    orbit_weights,
    parse_range,
)
from src.polynomial import Polynomial, RationalFunction, is_zero
from src.transfer import Weight, apply_transfer_n, distortion_coefficients, weight_product

GAP_TOLERANCE = Fraction(1, 10**5)
MAX_R = 32
CYLINDER_SLACK = 16
GUARD_BITS = 64


def _lower(x):
    return x.lower if isinstance(x, Enclosure) else x


def _upper(x):
    return x.upper if isinstance(x, Enclosure) else x


def _sup_product_dp(map_: PiecewiseMap, factors, n: int):
    """
    max over nonempty cells of Omega_n of prod_k factors[i_k], for affine maps:
    cells are grouped by their image interval, which is all the future depends on.
    """
    states = {(Fraction(0), Fraction(1)): Fraction(1)}
    for _ in range(n):
        following = {}
        for (ylo, yhi), value in states.items():
            for i, br in enumerate(map_.branches):
                a = br.lo if br.lo > ylo else ylo
                b = br.hi if br.hi < yhi else yhi
                if not a < b:
                    continue
                ya, yb = br(a), br(b)
                key = (ya, yb) if br.orientation > 0 else (yb, ya)
                candidate = value * factors[i]
                if key not in following or _upper(candidate) > _upper(following[key]):
                    following[key] = candidate
        states = following
    return max(states.values(), key=_upper)


def sup_weight_product(map_: PiecewiseMap, weight: Weight, n: int, power_of_inverse_slope: int = 0):
    """
    sup |phi_n ((T^n)')^-s| over [0,1] for s = power_of_inverse_slope (s = -1 bounds
    the L1 norm of L^n). Affine
    maps with branch-constant weights go through the image DP, anything else
    through the cells of Omega_n.
    """
    if map_.is_affine and weight.is_piecewise_constant:
        factors = [abs(c) / abs(br.poly.coeffs[1]) ** power_of_inverse_slope
                   for c, br in zip(weight.constants(), map_.branches)]
        return _sup_product_dp(map_, factors, n)
    partition = refine_partition(map_, n)
    cache = {}
    best = Fraction(0)
    for cell in partition.cells:
        phi_n = weight_product(map_, weight, cell.word, cache)
        if power_of_inverse_slope:
            phi_n = phi_n * RationalFunction(Polynomial.constant(1), cell.poly.derivative()) ** power_of_inverse_slope
        best = max(best, _upper(phi_n.sup_abs(cell.lo, cell.hi)))
    return best


def sup_inverse_derivative(map_: PiecewiseMap, n: int):
    """||1/(T^n)'||_Linf."""
    if map_.is_affine:
        factors = [1 / abs(br.poly.coeffs[1]) for br in map_.branches]
        return _sup_product_dp(map_, factors, n)
    return max(_upper(1 / inf_abs_derivative(cell)) for cell in refine_partition(map_, n).cells)


@dataclass(frozen=True)
class ExpansionEstimate:
    n_values: tuple
    eta_est: tuple
    lambda_est: tuple
    eta_spread: float
    lambda_spread: float

    @property
    def eta(self):
        return self.eta_est[-1]

    @property
    def lam(self):
        return self.lambda_est[-1]


def _spread(values) -> float:
    tail = [float(v) for v in values[-max(2, len(values) // 4):]]
    return max(tail) - min(tail)


def bv_essential_radius(map_: PiecewiseMap, weight: Weight, n_range) -> ExpansionEstimate:
    """||phi_n||_Linf^(1/n) and ||1/(T^n)'||_Linf^(1/n) for n in n_range."""
    n_values = tuple(sorted(set(parse_range(n_range))))
    eta, lam = [], []
    for n in n_values:
        eta.append(nth_root(sup_weight_product(map_, weight, n), n))
        lam.append(nth_root(sup_inverse_derivative(map_, n), n))
    logging.info(f"BV radius of {map_.name} at n={n_values[-1]}: eta={float(eta[-1]):.6g}, "
                 f"lambda={float(lam[-1]):.6g}")
    return ExpansionEstimate(n_values, tuple(eta), tuple(lam), _spread(eta), _spread(lam))


def thue_morse(length: int) -> tuple:
    return tuple(bin(k).count("1") % 2 for k in range(length))


def fibonacci_word(length: int) -> tuple:
    word = "0"
    while len(word) < length:
        word = "".join("01" if c == "0" else "0" for c in word)
    return tuple(int(c) for c in word[:length])


def eventually_periodic(word) -> bool:
    """A suffix starting in the first half repeats some period at least four times."""
    n = len(word)
    for s in range(n // 2 + 1):
        tail = n - s
        for p in range(1, tail // 4 + 1):
            if all(word[i] == word[i + p] for i in range(s, n - p)):
                return True
    return False


def itinerary_word(spec: str, length: int) -> tuple:
    """'thue-morse', 'fibonacci', 'word:0110...' or 'periodic:01'; letters 0/1 pick the middle branches."""
    if spec == "thue-morse":
        word = thue_morse(length)
    elif spec == "fibonacci":
        word = fibonacci_word(length)
    elif spec.startswith("periodic:"):
        raise PeriodicItinerary(f"itinerary {spec} is periodic; the map would be Markov", itinerary=spec)
    elif spec.startswith("word:"):
        letters = spec[len("word:"):]
        if len(letters) < length:
            raise PrecisionInsufficient(
                f"explicit itinerary has {len(letters)} letters, {length} are needed", itinerary=spec
            )
        word = tuple(int(c) for c in letters[:length])
    else:
        raise ValueError(f"unknown itinerary '{spec}'")
    if any(c not in (0, 1) for c in word):
        raise ValueError(f"itinerary letters must be 0 or 1: {spec}")
    if eventually_periodic(word):
        raise PeriodicItinerary(f"itinerary {spec} is eventually periodic at depth {length}", itinerary=spec)
    return word


@dataclass(frozen=True)
class ExampleMap:
    map: PiecewiseMap
    b: object
    rho: object
    m: int
    itinerary: str
    cylinder_depth: int
    notes: dict = field(default_factory=dict, compare=False)


def make_example_map(m: int, itinerary: str = "thue-morse", precision_bits: int | None = None,
                     depth: int = DEFAULT_DEPTH, mode: str = "interval") -> ExampleMap:
    """
    T_{m,rho}: slope m/(m-3) on [0,(m-3)/m), two full branches of slope m, and
    rho(x - (m-1)/m) on the last interval. b = T(1^-) = rho/m is the point of
    the middle cylinder set whose orbit follows the itinerary.
    """
    if m < 4:
        raise ValueError(f"the example family needs m >= 4, got {m}")
    # orbit points of b may share itinerary prefixes about twice the depth long,
    # and every step widens the enclosure of b by a factor m
    steps = 4 * (depth + 1) + CYLINDER_SLACK
    needed_bits = math.ceil(steps * math.log2(m)) + GUARD_BITS
    if precision_bits is None:
        precision_bits = max(DEFAULT_BITS, needed_bits)
    if precision_bits < needed_bits:
        raise PrecisionInsufficient(
            f"{precision_bits} bits cannot certify {depth} orbit steps at slope {m}; need {needed_bits}",
            bits=precision_bits, needed=needed_bits,
        )
    word = itinerary_word(itinerary, steps)

    m_frac = Fraction(m)
    c1, c2, c3 = Fraction(m - 3, m), Fraction(m - 2, m), Fraction(m - 1, m)
    offsets = (c1, c2)
    lo, hi = c1, c3
    for letter in reversed(word):
        lo, hi = lo / m_frac + offsets[letter], hi / m_frac + offsets[letter]
    b = (lo + hi) / 2
    if mode == "interval":
        b = Enclosure.from_bounds(lo, hi, precision_bits)
    elif mode != "exact":
        raise ValueError(f"unknown mode '{mode}'")
    rho = b * m_frac

    branches = (
        Branch(Fraction(0), c1, Polynomial([0, m_frac / (m - 3)]), 1),
        Branch(c1, c2, Polynomial([-(m - 3), m_frac]), 1),
        Branch(c2, c3, Polynomial([-(m - 2), m_frac]), 1),
        Branch(c3, Fraction(1), Polynomial([-rho * c3, rho]), 1, local=Polynomial([0, rho])),
    )
    name = f"T_{m},rho[{itinerary}]"
    map_ = PiecewiseMap(branches, name=name, notes={"b": b, "cylinder_depth": steps})
    logging.info(f"Built {name} with b at cylinder depth {steps}")
    return ExampleMap(map_, b, rho, m, itinerary, steps)


@dataclass(frozen=True)
class GapReport:
    m: int
    bv_est: object
    lambda_inf: object
    lambda_sup: object
    gap: object
    lower_bound: Fraction
    bv_n: int
    depth: int

    @property
    def bv_dominates(self) -> bool:
        return _upper(self.bv_est) >= _upper(self.lambda_sup)


def theorem3_gap(m: int, itinerary: str = "thue-morse", bv_n: int = 20, n_range="1..64",
                 precision_bits: int | None = None, depth: int = DEFAULT_DEPTH,
                 tolerance=GAP_TOLERANCE) -> GapReport:
    """BV radius minus Lambda^inf for T_{m,rho} with phi = 1/|T'|; at least (m-4)/m."""
    example = make_example_map(m, itinerary, precision_bits, depth)
    weight = Weight.srb(example.map)
    bv = bv_essential_radius(example.map, weight, [bv_n]).eta
    try:
        table = discontinuity_orbits(example.map, depth)
        low, high = lambda_overall(example.map, weight, n_range, table)
    except UndecidableAtDepth as exc:
        bits = example.b.bits
        raise PrecisionInsufficient(
            f"the orbit of b is not certified to depth {depth} at {bits} bits: {exc}", bits=bits
        ) from exc
    gap = bv - low
    lower_bound = Fraction(m - 4, m)
    report = GapReport(m, bv, low, high, gap, lower_bound, bv_n, depth)
    gap_low = gap.lower if isinstance(gap, Enclosure) else gap
    if gap_low < lower_bound - tolerance:
        raise GapBelowBound(f"gap {float(gap_low):.8g} is below (m-4)/m = {lower_bound}", report=report)
    logging.info(f"m={m}: BV radius {float(bv):.6g}, Lambda {float(low):.6g}, gap {float(gap_low):.6g}")
    return report


def minimal_m_for_gap(c) -> int:
    """Smallest m >= 4 with (m-4)/m > c."""
    c = Fraction(c)
    if c >= 1:
        raise ValueError("the gap (m-4)/m never reaches 1")
    m = 4
    while not Fraction(m - 4, m) > c:
        m += 1
    return m


def zeta_weights(map_: PiecewiseMap, weight: Weight, table, Lambda_tilde, K: int | None = None,
                 expansion: ExpansionEstimate | None = None, lambda_sup=None) -> WeightScheme:
    """zeta(j,k) = Lambda~^k / |phi_k(a_{j,0})|, plus the smallest r with eta lambda^(r-1) < Lambda~."""
    Lambda_tilde = Fraction(Lambda_tilde)
    K = table.depth if K is None else min(K, table.depth)
    if lambda_sup is not None and not _upper(lambda_sup) < Lambda_tilde:
        raise LambdaTildeTooSmall(f"Lambda~ = {Lambda_tilde} must exceed Lambda^sup = {lambda_sup}",
                                  lambda_sup=lambda_sup)
    zeta = {}
    domination = Fraction(1)
    for orbit in table.infinite_orbits:
        product = Fraction(1)
        phis = orbit_weights(map_, weight, orbit.start, K)
        for k in range(K + 1):
            zeta[(orbit.index, k)] = Lambda_tilde**k / abs(product)
            inverse = _upper(1 / zeta[(orbit.index, k)])
            if inverse > domination:
                domination = inverse
            if k < K:
                product = product * phis[k]
    r = 1
    if expansion is not None:
        eta, lam = _upper(expansion.eta), _upper(expansion.lam)
        while not eta * lam ** (r - 1) < Lambda_tilde:
            r += 1
            if r > MAX_R:
                raise LambdaTildeTooSmall(
                    f"eta lambda^(r-1) stays above {Lambda_tilde} for r <= {MAX_R}", eta=eta, lam=lam
                )
    return WeightScheme(Lambda_tilde, r, zeta, K, domination)


def single_jump_observable(table, j: int, k: int) -> PiecewiseSmooth:
    """An indicator with |jump| 1 at a_{j,k}, vanishing next to the orbit start."""
    a_k = table.point(j, k).value
    start = table.point(j, 0).value
    if a_k < start:
        return PiecewiseSmooth.indicator(Fraction(0), a_k)
    return PiecewiseSmooth.indicator(a_k, Fraction(1))


@dataclass(frozen=True)
class LYReport:
    n: int
    h_index: int
    functional_part: tuple
    deep_part: object
    jump_norm_h: object
    contraction_ratio: object
    bound: object
    continuous_ratio: object
    top_term: object
    C_n: object
    continuous_g: object = Fraction(0)
    continuous_bound: object = None


def _split_jumps(g: PiecewiseSmooth, scheme: WeightScheme, table, cut: int):
    """(functional terms, deep sum) of the weighted jump norm over D^t g, t < r."""
    functional, deep = [], Fraction(0)
    current = g
    for _ in range(scheme.r):
        for x in current.breakpoints:
            jump = jump_at(current, x)
            if is_zero(jump):
                continue
            tag = table.tag(x)
            if tag is None or tag[0] == "beyond":
                continue
            term = scheme.weight_for(tag) * abs(jump)
            if tag[0] == "a" and tag[2] >= cut:
                deep = deep + term
            else:
                functional.append(term)
        current = current.derivative()
    return tuple(functional), deep


def _weighted_jump_norm(h: PiecewiseSmooth, scheme: WeightScheme, table):
    functional, deep = _split_jumps(h, scheme, table, 0)
    return deep + sum(functional, Fraction(0))


def lasota_yorke_ratio(map_: PiecewiseMap, weight: Weight, scheme: WeightScheme, table, h_suite,
                       n_range) -> list:
    """
    Per n and suite element: the deep-jump part of ||L^n h||_J against
    Lambda~^n ||h||_J, after setting aside the finitely many functionals at
    b_k and a_{j,k} with k < n + k0 - 1.

    The continuous part is bounded through the distortion coefficients:
    ||D^p L^n h||_L1 <= sup|phi_n (T^n)'| sum_l sup|A_{l,p,n}| ||D^l h||_L1.
    """
    r = scheme.r
    reports = []
    k0 = table.k0 or 1
    for n in parse_range(n_range):
        top = sup_weight_product(map_, weight, n, r - 1)
        bound = scheme.Lambda_tilde**n
        mass = _upper(sup_weight_product(map_, weight, n, -1))
        a_sup = distortion_coefficients(map_, weight, n, r).sup_norms
        for index, h in enumerate(h_suite):
            g = apply_transfer_n(map_, weight, h, n)
            functional, deep = _split_jumps(g, scheme, table, n + k0 - 1)
            jump_norm_h = _weighted_jump_norm(h, scheme, table)
            ratio = deep / jump_norm_h if not is_zero(jump_norm_h) else Fraction(0)
            cont_h = continuous_norm(h, r)
            cont_g = continuous_norm(g, r)
            lower = continuous_norm(h, r - 1)
            C_n = Fraction(0)
            if not is_zero(lower):
                C_n = max(C_n, _upper((cont_g - _upper(top) * cont_h) / lower))
            derivative_l1 = [_upper(compute_norm(h.derivative(l), "L1")) for l in range(r + 1)]
            cont_bound = mass * sum(_upper(a_sup[(l, p)]) * derivative_l1[l]
                                    for p in range(r + 1) for l in range(p + 1))
            reports.append(LYReport(n, index, functional, deep, jump_norm_h, ratio, bound,
                                    cont_g / cont_h if not is_zero(cont_h) else Fraction(0), top, C_n,
                                    cont_g, cont_bound))
    return reports


def fitted_ly_constant(reports, n_fit: int | None = None) -> Fraction:
    """Smallest C with contraction_ratio <= C Lambda~^n over the reports with n <= n_fit."""
    best = Fraction(0)
    for rep in reports:
        if n_fit is not None and rep.n > n_fit:
            continue
        if sign(rep.bound) > 0:
            best = max(best, _upper(rep.contraction_ratio / rep.bound))
    return best


@dataclass(frozen=True)
class LYCheck:
    n: int
    worst: object
    allowed: object
    fitted: bool

    @property
    def passed(self) -> bool:
        return self.fitted or _lower(self.worst) <= _upper(self.allowed)


def ly_holdout(reports, n_fit: int) -> tuple:
    """
    (C, checks): C is fitted on n <= n_fit and every larger n must stay under
    C Lambda~^n. A deep-jump ratio that stops decaying fails on the held-out n.
    """
    C = fitted_ly_constant(reports, n_fit)
    checks = []
    for n in sorted({rep.n for rep in reports}):
        at_n = [rep for rep in reports if rep.n == n]
        worst = max((_upper(rep.contraction_ratio) for rep in at_n), default=Fraction(0))
        checks.append(LYCheck(n, worst, C * at_n[0].bound, n <= n_fit))
    return C, checks


def single_jump_ratios(map_: PiecewiseMap, weight: Weight, scheme: WeightScheme, table, n_max: int,
                       j: int = 0, k: int | None = None) -> dict:
    """n -> deep-jump contraction ratio of the indicator with one jump at a_{j,k}."""
    k = (table.k0 or 1) + 1 if k is None else k
    if k + n_max > scheme.depth:
        raise ValueError(f"a_({j},{k + n_max}) lies beyond the weight table")
    h = single_jump_observable(table, j, k)
    ratios = {}
    for rep in lasota_yorke_ratio(map_, weight, scheme, table, [h], range(1, n_max + 1)):
        ratios[rep.n] = rep.contraction_ratio
    return ratios
