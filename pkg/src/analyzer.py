import logging
from fractions import Fraction

from src.bounds_examples import (
    bv_essential_radius,
    lasota_yorke_ratio,
    ly_holdout,
    single_jump_ratios,
    zeta_weights,
)
from src.dual_certificates import certified_radius, certify_grid, jump_depth
from src.errors import PreconditionK0, SpectraError
from src.numeric import Enclosure, format_scalar, is_exact, radius, to_fraction
from src.observables import compute_norm, custom_norm, jump_tail_bound
from src.orbits import lambda_overall, parse_range
from src.transfer import (
    build_h_suite,
    distortion_coefficients,
    l1_contraction_check,
    lemma_superDa_check,
    linearity_check,
    positivity_check,
    boundedness_constant,
    transfer_paths_agree,
    verify_derivative_identity,
    verify_jump_shift,
)

SUITES = ("jump-shift", "deriv-identity", "super-da", "dual-eigen", "ly")
EXTRA_CHECKS = ("norm-lattice", "l1-contraction", "transfer-paths")


def _lower(x):
    return x.lower if isinstance(x, Enclosure) else x


def _upper(x):
    return x.upper if isinstance(x, Enclosure) else x


def _agrees(a, b, rel=Fraction(1, 10**12)) -> bool:
    """Exact equality for rationals, overlap up to rel for anything else."""
    if is_exact(a) and is_exact(b):
        return a == b
    scale = max(abs(to_fraction(b)), Fraction(1))
    return abs(to_fraction(a) - to_fraction(b)) <= rel * scale + radius(a) + radius(b)


class VerificationSuite:
    """
    Runs the identity checks behind the transfer-operator bounds on one map
    and weight, over a seeded random suite of observables.
    """

    def __init__(self, map_, weight, table, config, seed=None, k_range=None, n_range=None):
        self.map = map_
        self.weight = weight
        self.table = table
        self.config = config
        verify = config.get("verify", {})
        orbits = config.get("orbits", {})
        self.seed = int(seed if seed is not None else config.get("run_settings", {}).get("seed", 20240229))
        self.suite_size = int(verify.get("suite_size", 20))
        self.lattice_size = int(verify.get("lattice_size", 50))
        self.max_iterates = int(verify.get("max_iterates", 3))
        self.k_range = parse_range(k_range if k_range is not None else str(verify.get("k_range", "1..32")))
        self.super_da_n = int(verify.get("super_da_n", 6))
        self.super_da_p = int(verify.get("super_da_p", 3))
        self.super_da_samples = int(verify.get("super_da_samples", 3))
        self.n_range = parse_range(n_range if n_range is not None else str(orbits.get("n_range", "1..64")))
        self.tail_fraction = float(orbits.get("tail_fraction", 0.25))
        bounds = config.get("bounds", {})
        self.lambda_tilde = bounds.get("lambda_tilde", "auto")
        self.ly_n_max = int(bounds.get("ly_n_max", 8))
        self.bv_n = int(bounds.get("bv_n", 20))
        self._suite = None
        self._lambda = None

    @property
    def suite(self) -> list:
        if self._suite is None:
            self._suite = build_h_suite(self.map, self.weight, self.suite_size, self.seed, self.max_iterates)
        return self._suite

    @property
    def lambdas(self):
        if self._lambda is None:
            self._lambda = lambda_overall(self.map, self.weight, self.n_range, self.table,
                                          tail_fraction=self.tail_fraction)
        return self._lambda

    def analyze(self, suite_name: str) -> dict:
        """
        Runs one suite, or every suite plus the extra checks for 'all'.
        Orbit-dependent checks are skipped under 'all' when the map has no k0.
        """
        checks = {
            "jump-shift": self._check_jump_shift,
            "deriv-identity": self._check_deriv_identity,
            "super-da": self._check_super_da,
            "dual-eigen": self._check_dual_eigen,
            "ly": self._check_lasota_yorke,
            "norm-lattice": self._check_norm_lattice,
            "l1-contraction": self._check_l1_contraction,
            "transfer-paths": self._check_transfer_paths,
        }
        names = SUITES + EXTRA_CHECKS if suite_name == "all" else (suite_name,)
        results = {}
        for name in names:
            if name not in checks:
                raise ValueError(f"unknown verification suite '{name}'")
            logging.info(f"Running {name} on {self.map.name} (weight {self.weight.label})...")
            try:
                results[name] = checks[name]()
            except PreconditionK0 as e:
                if suite_name != "all":
                    raise
                logging.warning(f"Skipping {name}: {e}")
                results[name] = {"name": name, "passed": True, "skipped": str(e), "rows": []}
            status = "skipped" if results[name].get("skipped") else ("passed" if results[name]["passed"] else "FAILED")
            log = logging.error if status == "FAILED" else logging.info
            log(f"{name}: {status}")
        return results

    def _check_jump_shift(self):
        if self.table.k0 is None:
            raise PreconditionK0("the jump-shift identity needs a non-trivial orbit with k0")
        k_range = [k for k in self.k_range if self.table.k0 <= k <= self.table.depth]
        if len(k_range) < len(self.k_range):
            logging.info(f"jump-shift: k restricted to [{self.table.k0}, {self.table.depth}]")
        rows = []
        passed = True
        for j in range(len(self.table.infinite_orbits)):
            for index, h in enumerate(self.suite):
                report = verify_jump_shift(self.map, self.weight, self.table, h, k_range, j)
                passed = passed and report.passed
                rows.append({
                    "orbit": j,
                    "h": index,
                    "k_range": f"{k_range[0]}..{k_range[-1]}" if k_range else "-",
                    "max_residual": format_scalar(report.max_residual),
                    "passed": report.passed,
                })
        return {"name": "jump-shift", "passed": passed, "rows": rows, "k0": self.table.k0}

    def _check_deriv_identity(self):
        rows = []
        passed = True
        for index, h in enumerate(self.suite):
            report = verify_derivative_identity(self.map, self.weight, h)
            passed = passed and report.passed
            rows.append({"h": index, "residual": format_scalar(report.max_residual), "passed": report.passed})
        return {"name": "deriv-identity", "passed": passed, "rows": rows}

    def _check_super_da(self):
        rows = []
        passed = True
        for n in range(1, self.super_da_n + 1):
            table = distortion_coefficients(self.map, self.weight, n, self.super_da_p)
            closed = table.closed_form_ok and (table.b_matches_a or not table.B)
            passed = passed and closed
            for p in range(self.super_da_p + 1):
                worst = Fraction(0)
                ok = True
                for h in self.suite[: self.super_da_samples]:
                    report = lemma_superDa_check(self.map, self.weight, h, n, p)
                    ok = ok and report.passed
                    worst = max(worst, _upper(report.max_residual))
                passed = passed and ok
                rows.append({
                    "n": n,
                    "p": p,
                    "cells": len(table.cells),
                    "closed_form": table.closed_form_ok,
                    "sup_A_pp": format_scalar(table.sup_norms[(p, p)]),
                    "max_residual": format_scalar(worst),
                    "passed": ok and closed,
                })
        return {"name": "super-da", "passed": passed, "rows": rows}

    def _check_dual_eigen(self):
        if self.table.k0 is None:
            raise PreconditionK0("the dual certificate needs k0")
        lambda_inf = self.lambdas[0]
        rows = []
        passed = True
        for j in range(len(self.table.infinite_orbits)):
            certificates = certify_grid(self.map, self.weight, self.table, self.suite, lambda_inf, j)
            for row in certificates:
                passed = passed and row.verdict != "fail"
                rows.append({
                    "orbit": j,
                    "lambda": str(row.lam),
                    "residual": format_scalar(row.residual),
                    "tail_bound": "none" if row.tail_bound is None else format_scalar(row.tail_bound),
                    "verdict": row.verdict,
                })
            radius_reached = certified_radius(certificates)
            logging.info(f"orbit {j}: certified up to |lambda| = {float(radius_reached):.6g}")
        depths = [jump_depth(h, self.table) for h in self.suite]
        return {"name": "dual-eigen", "passed": passed, "rows": rows,
                "lambda_inf": format_scalar(lambda_inf), "max_jump_depth": max(depths, default=-1)}

    def _scheme(self):
        low, high = self.lambdas
        if self.lambda_tilde == "auto":
            lambda_tilde = (Fraction(_upper(high)) + 1) / 2
        else:
            lambda_tilde = Fraction(str(self.lambda_tilde))
        expansion = bv_essential_radius(self.map, self.weight, [self.bv_n])
        return zeta_weights(self.map, self.weight, self.table, lambda_tilde,
                            expansion=expansion, lambda_sup=high)

    def _check_lasota_yorke(self):
        if self.table.k0 is None:
            raise PreconditionK0("the Lasota-Yorke measurement needs k0")
        scheme = self._scheme()
        rows = []
        passed = True
        ratios = single_jump_ratios(self.map, self.weight, scheme, self.table, self.ly_n_max)
        for n, ratio in ratios.items():
            expected = scheme.Lambda_tilde ** n
            ok = _agrees(ratio, expected)
            passed = passed and ok
            rows.append({"kind": "single-jump", "n": n, "value": format_scalar(ratio),
                         "bound": format_scalar(expected), "passed": ok})
        reports = lasota_yorke_ratio(self.map, self.weight, scheme, self.table, self.suite,
                                     range(1, self.ly_n_max + 1))
        # C is fitted on the first half of n; the second half has to obey it
        n_fit = max(1, self.ly_n_max // 2)
        C, checks = ly_holdout(reports, n_fit)
        for check in checks:
            passed = passed and check.passed
            rows.append({"kind": "suite-fit" if check.fitted else "suite", "n": check.n,
                         "value": format_scalar(check.worst), "bound": format_scalar(check.allowed),
                         "passed": check.passed})
        for n in range(1, self.ly_n_max + 1):
            at_n = [rep for rep in reports if rep.n == n]
            if not at_n:
                continue
            worst = max(at_n, key=lambda rep: _lower(rep.continuous_g) - _upper(rep.continuous_bound))
            ok = _lower(worst.continuous_g) <= _upper(worst.continuous_bound)
            passed = passed and ok
            rows.append({"kind": "continuous", "n": n, "value": format_scalar(worst.continuous_g),
                         "bound": format_scalar(worst.continuous_bound), "passed": ok})
        return {"name": "ly", "passed": passed, "rows": rows, "r": scheme.r, "n_fit": n_fit,
                "Lambda_tilde": format_scalar(scheme.Lambda_tilde), "C": format_scalar(C)}

    def _check_norm_lattice(self):
        if self.table.k0 is None:
            raise PreconditionK0("the zeta norm needs a non-trivial discontinuity orbit with k0")
        scheme = self._scheme()
        r = max(scheme.r, 2)
        C = scheme.domination_constant
        lattice_suite = build_h_suite(self.map, self.weight, self.lattice_size, self.seed + 1, self.max_iterates)
        violations = 0
        tail = Fraction(0)
        for h in lattice_suite:
            top = custom_norm(h, scheme, self.table, r)
            missed = jump_tail_bound(h, scheme)
            tail = None if tail is None or missed is None else max(tail, missed, key=_upper)
            for l in range(r + 1):
                g = h.derivative(l)
                for s in range(r - l + 1):
                    if _upper(custom_norm(g, scheme, self.table, s)) > top:
                        violations += 1
                if l + 1 <= r and _upper(compute_norm(g, "BV")) > C * top:
                    violations += 1
        rows = [{"suite_size": len(lattice_suite), "r": r, "C": format_scalar(C), "violations": violations,
                 "jump_tail": "none" if tail is None else format_scalar(tail)}]
        return {"name": "norm-lattice", "passed": violations == 0, "rows": rows}

    def _check_l1_contraction(self):
        rows = []
        passed = True
        scheme = self._scheme() if self.table.k0 is not None else None
        for index, h in enumerate(self.suite):
            lhs, rhs = l1_contraction_check(self.map, self.weight, h)
            contraction = _lower(lhs) <= _upper(rhs)
            linear = linearity_check(self.map, self.weight, h, self.suite[(index + 1) % len(self.suite)],
                                     Fraction(index + 1, 3))
            positive = positivity_check(self.map, self.weight, h * h)
            ok = contraction and linear and positive
            passed = passed and ok
            rows.append({"h": index, "L1(Lh)": format_scalar(lhs), "L1(phi|T'|h)": format_scalar(rhs),
                         "linear": linear, "positive": positive, "passed": ok})
        result = {"name": "l1-contraction", "passed": passed, "rows": rows}
        if scheme is not None:
            result["boundedness"] = format_scalar(
                boundedness_constant(self.map, self.weight, scheme, self.table, self.suite)
            )
        return result

    def _check_transfer_paths(self):
        rows = []
        passed = True
        for n in range(1, self.super_da_n + 1):
            ok = all(transfer_paths_agree(self.map, self.weight, h, n) for h in self.suite[: self.super_da_samples])
            passed = passed and ok
            rows.append({"n": n, "agree": ok})
        return {"name": "transfer-paths", "passed": passed, "rows": rows}


def summarize_failures(results: dict) -> list:
    return [name for name, result in results.items() if not result["passed"]]


def safe_analyze(suite: VerificationSuite, suite_name: str) -> dict:
    """analyze() with SpectraError folded into a failed result for the report command."""
    try:
        return suite.analyze(suite_name)
    except SpectraError as e:
        logging.error(f"{suite_name} could not run: {e}")
        return {suite_name: {"name": suite_name, "passed": False, "error": str(e), "rows": []}}
