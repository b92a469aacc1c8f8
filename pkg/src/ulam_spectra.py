"""
Ulam discretization of the transfer operator and its eigenvalues.

The eigenvalues here form a discretization spectrum. They are advisory and
are never read as enclosures of the essential spectrum.
"""
from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from src.bounds_examples import bv_essential_radius
from src.errors import DegenerateBin, SolverFailure
from src.map_core import PiecewiseMap
from src.models import SpectralReport
from src.numeric import to_fraction
from src.observables import PiecewiseSmooth
from src.orbits import DEFAULT_DEPTH, discontinuity_orbits, lambda_overall
from src.polynomial import Polynomial, RationalFunction
from src.transfer import Weight, apply_transfer

BIN_POLICIES = ("uniform", "gamma_aligned")


@dataclass(frozen=True)
class UlamMatrix:
    edges: tuple
    masses: dict
    policy: str

    @property
    def size(self) -> int:
        return len(self.edges) - 1

    def widths(self) -> list:
        return [b - a for a, b in zip(self.edges, self.edges[1:])]

    def mass_array(self) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for (i, j), value in self.masses.items():
            out[i, j] = float(value)
        return out

    def operator(self) -> np.ndarray:
        """Bin-average operator: row i of the masses divided by |bin_i|."""
        widths = np.array([float(w) for w in self.widths()])
        return self.mass_array() / widths[:, None]

    def project(self, h: PiecewiseSmooth) -> np.ndarray:
        """Bin averages of h."""
        return np.array([float(_integrate(h, a, b) / (b - a)) for a, b in zip(self.edges, self.edges[1:])])


def _integrate(h: PiecewiseSmooth, lo, hi):
    """Integral of h over a bin; enclosed breakpoints are read at their midpoints like the bin edges."""
    total = Fraction(0)
    for a, b, p in h.cells():
        a, b = to_fraction(a), to_fraction(b)
        x0 = a if a > lo else lo
        x1 = b if b < hi else hi
        if x0 < x1:
            total += to_fraction(p.integrate(x0, x1))
    return total


def bin_edges(map_: PiecewiseMap, M: int, policy: str = "gamma_aligned") -> tuple:
    """M uniform bins, plus Gamma and its one-sided images as extra edges when aligned."""
    if M < 2:
        raise ValueError("an Ulam matrix needs M >= 2")
    if policy not in BIN_POLICIES:
        raise ValueError(f"unknown bin policy '{policy}', expected one of {BIN_POLICIES}")
    edges = {Fraction(i, M) for i in range(M + 1)}
    if policy == "gamma_aligned":
        for c in map_.breakpoints:
            edges.add(to_fraction(c))
        for c, side in map_.one_sided_gamma():
            value, _, _ = map_.step(c, side)
            edges.add(to_fraction(value))
    return tuple(sorted(e for e in edges if 0 <= e <= 1))


def _density(map_: PiecewiseMap, weight: Weight, i: int):
    """phi |T'| on branch i, as a polynomial when it is one."""
    br = map_.branches[i]
    product = weight.piece(i) * RationalFunction.of(br.poly.derivative() * br.orientation)
    return product.as_polynomial(), product


def _mass(poly, rational, lo, hi):
    if poly is not None:
        return to_fraction(poly.integrate(lo, hi))
    # Gauss-Legendre on a quotient, advisory precision
    x, w = np.polynomial.legendre.leggauss(16)
    a, b = float(lo), float(hi)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    values = np.array([float(rational(Fraction(float(v)))) for v in t])
    return Fraction(float(0.5 * (b - a) * np.dot(w, values)))


def ulam_matrix(map_: PiecewiseMap, weight: Weight, M: int, bin_policy: str = "gamma_aligned",
                edges=None) -> UlamMatrix:
    """masses[(i, j)] = integral over bin_j & T^-1 bin_i of phi |T'|."""
    policy = "explicit" if edges is not None else bin_policy
    edges = tuple(Fraction(e) for e in edges) if edges is not None else bin_edges(map_, M, bin_policy)
    for a, b in zip(edges, edges[1:]):
        if not a < b:
            raise DegenerateBin(f"bin [{a}, {b}] has no width", lo=a, hi=b)
    masses = {}
    for w, br in enumerate(map_.branches):
        poly, rational = _density(map_, weight, w)
        lo_w, hi_w = to_fraction(br.lo), to_fraction(br.hi)
        for j in range(len(edges) - 1):
            x0, x1 = max(edges[j], lo_w), min(edges[j + 1], hi_w)
            if not x0 < x1:
                continue
            y_a, y_b = to_fraction(br(x0)), to_fraction(br(x1))
            y0, y1 = min(y_a, y_b), max(y_a, y_b)
            first = max(0, bisect_right(edges, y0) - 1)
            for i in range(first, len(edges) - 1):
                if edges[i] >= y1:
                    break
                c0, c1 = max(edges[i], y0), min(edges[i + 1], y1)
                if not c0 < c1:
                    continue
                p0 = to_fraction(br.poly.solve_monotone(c0, x0, x1))
                p1 = to_fraction(br.poly.solve_monotone(c1, x0, x1))
                lo, hi = min(p0, p1), max(p0, p1)
                masses[(i, j)] = masses.get((i, j), Fraction(0)) + _mass(poly, rational, lo, hi)
    logging.info(f"Ulam matrix for {map_.name}: {len(edges) - 1} bins ({bin_policy}), {len(masses)} nonzero masses")
    return UlamMatrix(edges, masses, policy)


@dataclass(frozen=True)
class UlamSpectrum:
    M: int
    eigenvalues: np.ndarray
    condition: float
    eigenvector_condition: float

    @property
    def leading(self) -> complex:
        return complex(self.eigenvalues[0]) if len(self.eigenvalues) else 0j


def eigen_spectrum(mat: UlamMatrix) -> UlamSpectrum:
    """Dense eigensolve of the bin-average operator, sorted by decreasing modulus."""
    A = mat.operator()
    try:
        values, vectors = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"eigensolve failed for M={mat.size}: {exc}", M=mat.size) from exc
    if not np.all(np.isfinite(values)):
        raise SolverFailure(f"non-finite eigenvalues for M={mat.size}", M=mat.size)
    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    condition = float(np.linalg.cond(A))
    eigvec_condition = float(np.linalg.cond(vectors))
    return UlamSpectrum(mat.size, values, condition, eigvec_condition)


def consistency_error(map_: PiecewiseMap, weight: Weight, mat: UlamMatrix, h: PiecewiseSmooth) -> float:
    """L1 distance between U(Pi h) and Pi(L h) on the bins."""
    widths = np.array([float(w) for w in mat.widths()])
    discrete = mat.operator() @ mat.project(h)
    exact = mat.project(apply_transfer(map_, weight, h))
    return float(np.sum(np.abs(discrete - exact) * widths))


def consistency_slope(map_: PiecewiseMap, weight: Weight, M_list, bin_policy: str = "gamma_aligned",
                      h: PiecewiseSmooth | None = None):
    """(errors per M, fitted log-log slope); h defaults to x."""
    h = h or PiecewiseSmooth.polynomial(Polynomial.identity())
    errors = {}
    for M in M_list:
        mat = ulam_matrix(map_, weight, M, bin_policy)
        errors[M] = consistency_error(map_, weight, mat, h)
    Ms = sorted(errors)
    positive = [M for M in Ms if errors[M] > 0]
    if len(positive) < 2:
        return errors, None
    slope, _ = np.polyfit(np.log([float(M) for M in positive]), np.log([errors[M] for M in positive]), 1)
    return errors, float(slope)


def mass_check(spectrum: UlamSpectrum) -> bool:
    """|lambda_1 - 1| <= 10 M^-1/2 for SRB-normalized weights."""
    return bool(abs(spectrum.leading - 1) <= 10 / np.sqrt(spectrum.M))


def spectral_report(map_: PiecewiseMap, weight: Weight, M_list, n_range, bin_policy: str = "gamma_aligned",
                    depth: int = DEFAULT_DEPTH, bv_n: int = 20, table=None):
    table = table or discontinuity_orbits(map_, depth)
    low, high = lambda_overall(map_, weight, n_range, table)
    bv = bv_essential_radius(map_, weight, [bv_n])
    spectra = [eigen_spectrum(ulam_matrix(map_, weight, M, bin_policy)) for M in M_list]
    errors, slope = consistency_slope(map_, weight, M_list, bin_policy)
    return SpectralReport(
        map_name=map_.name,
        weight_label=weight.label,
        lambda_inf=low,
        lambda_sup=high,
        bv_radius=bv.eta,
        bv_n=bv_n,
        markov=table.markov,
        depth=table.depth,
        k0=table.k0,
        spectra=tuple(spectra),
        consistency_errors=errors,
        consistency_slope=slope,
    )
