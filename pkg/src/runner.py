import logging
from fractions import Fraction

from src.analyzer import VerificationSuite, safe_analyze, summarize_failures
from src.bounds_examples import bv_essential_radius, minimal_m_for_gap, theorem3_gap
from src.numeric import Enclosure, format_scalar
from src.orbits import discontinuity_orbits, lambda_bounds, lambda_overall, orbit_rows, parse_range
from src.reporter import Reporter
from src.services.map_loader import load_map, load_weight
from src.ulam_spectra import mass_check, spectral_report

EIGENVALUES_PER_M = 32
DEFAULT_EXAMPLE_M = 10


def _upper(x):
    return x.upper if isinstance(x, Enclosure) else x


def _lower(x):
    return x.lower if isinstance(x, Enclosure) else x


def _header(command, options):
    header = {"command": command, "seed": options["seed"]}
    for key in ("map", "weight", "depth", "n_range", "precision_bits", "suite", "m_list", "bin_policy"):
        if options.get(key) is not None:
            value = options[key]
            if key == "n_range" and not isinstance(value, str):
                value = f"{min(value)}..{max(value)}"
            header[key] = value
    return header


def _load(options):
    map_ = load_map(options["map"], options.get("precision_bits"), options["max_degree"], options["depth"])
    weight = load_weight(map_, options.get("weight", "srb"))
    return map_, weight


def _orbits(options):
    map_, weight = _load(options)
    table = discontinuity_orbits(map_, options["depth"])
    notes = [f"status: {table.status}", f"k0 = {table.k0}"]
    if table.markov:
        notes.append("Markov: every discontinuity orbit closes up")
    return {"tables": {"orbits": orbit_rows(table, map_, weight)}, "notes": notes}


def _lambda_rows(map_, weight, table, n_range, tail_fraction=0.25):
    rows = []
    for orbit in table.infinite_orbits:
        est = lambda_bounds(map_, weight, table, orbit.index, n_range, tail_fraction)
        rows.append({
            "orbit": orbit.index,
            "start": f"{format_scalar(est.point.value)}{est.point.side.symbol}",
            "lambda_inf": format_scalar(est.lambda_inf_est),
            "lambda_sup": format_scalar(est.lambda_sup_est),
            "cauchy": format_scalar(est.cauchy_diagnostic),
            "window": f"{est.window[0]}..{est.window[-1]}",
        })
    return rows


def _lambda(options):
    map_, weight = _load(options)
    table = discontinuity_orbits(map_, options["depth"])
    low, high = lambda_overall(map_, weight, options["n_range"], table, tail_fraction=options["tail_fraction"])
    notes = [f"Lambda^inf = {format_scalar(low)}", f"Lambda^sup = {format_scalar(high)}"]
    if table.markov:
        notes.append("Markov: no non-trivial discontinuity, Lambda = 0 by convention")
    rows = _lambda_rows(map_, weight, table, options["n_range"], options["tail_fraction"])
    return {"tables": {"lambda": rows}, "notes": notes}


def _bv_radius(options):
    map_, weight = _load(options)
    n_values = parse_range(f"1..{options['bv_n']}")
    est = bv_essential_radius(map_, weight, n_values)
    rows = [{"n": n, "eta_n": format_scalar(eta), "lambda_n": format_scalar(lam)}
            for n, eta, lam in zip(est.n_values, est.eta_est, est.lambda_est)]
    table = discontinuity_orbits(map_, options["depth"])
    low, high = lambda_overall(map_, weight, options["n_range"], table, tail_fraction=options["tail_fraction"])
    dominates = _upper(est.eta) >= _lower(high)
    notes = [
        f"BV radius (n={est.n_values[-1]}) = {format_scalar(est.eta)}, spread {est.eta_spread:.3g}",
        f"Lambda^sup = {format_scalar(high)}; BV radius {'>=' if dominates else '<'} Lambda^sup",
    ]
    return {"tables": {"bv_radius": rows}, "notes": notes}


def _example_gap(options):
    c = options.get("c")
    m = options.get("m")
    if m is None:
        m = minimal_m_for_gap(Fraction(c)) if c is not None else DEFAULT_EXAMPLE_M
        logging.info(f"Using m = {m} for the example family")
    report = theorem3_gap(m, options["itinerary"], options["bv_n"], options["n_range"],
                          options.get("precision_bits"), options["depth"])
    gap = report.gap
    passed = True
    notes = [f"T_{m},rho with itinerary {options['itinerary']}"]
    if c is not None:
        passed = _lower(gap) > Fraction(str(c))
        relation = ">" if passed else "<="
        notes.append(f"gap {float(_lower(gap)):.6g} {relation} {c}")
    rows = [{
        "experiment": "example-gap",
        "m": m,
        "n": report.bv_n,
        "bv_est": format_scalar(report.bv_est),
        "lambda_est": format_scalar(report.lambda_inf),
        "gap": format_scalar(gap),
        "ly_ratio": "-",
        "r": "-",
        "Lambda_tilde": "-",
    }]
    return {"tables": {"results": rows}, "notes": notes, "passed": passed}


def _verify(options, config):
    map_, weight = _load(options)
    table = discontinuity_orbits(map_, options["depth"])
    suite = VerificationSuite(map_, weight, table, config, options["seed"], options.get("k_range"), options["n_range"])
    results = suite.analyze(options["suite"])
    failures = summarize_failures(results)
    notes = [f"{name}: skipped ({r['skipped']})" for name, r in results.items() if r.get("skipped")]
    notes += [f"{name}: FAILED" for name in failures]
    tables = {name: r["rows"] for name, r in results.items()}
    return {"tables": tables, "notes": notes, "passed": not failures}


def _ulam_tables(report):
    eigen_rows = []
    for spectrum in report.spectra:
        for value in spectrum.eigenvalues[:EIGENVALUES_PER_M]:
            eigen_rows.append({"re": float(value.real), "im": float(value.imag),
                               "modulus": float(abs(value)), "M": spectrum.M})
    consistency_rows = [
        {"M": M, "error": error, "mass_check": mass_check(spectrum)}
        for (M, error), spectrum in zip(sorted(report.consistency_errors.items()), report.spectra)
    ]
    return {"eigenvalues": eigen_rows, "consistency": consistency_rows}


def _ulam(options):
    map_, weight = _load(options)
    table = discontinuity_orbits(map_, options["depth"])
    report = spectral_report(map_, weight, options["m_list"], options["n_range"], options["bin_policy"],
                             options["depth"], options["bv_n"], table)
    slope = "n/a" if report.consistency_slope is None else f"{report.consistency_slope:.4g}"
    notes = [
        f"Lambda^inf = {format_scalar(report.lambda_inf)} (depth {report.depth})",
        f"BV radius = {format_scalar(report.bv_radius)} (n = {report.bv_n})",
        f"BV radius {'>=' if report.bv_dominates else '<'} Lambda^sup",
        f"consistency slope over M: {slope}",
        "Ulam eigenvalues are a discretization spectrum, not enclosures",
    ]
    return {"tables": _ulam_tables(report), "notes": notes, "plot": report}


def _full_report(options, config):
    map_, weight = _load(options)
    table = discontinuity_orbits(map_, options["depth"])
    report = spectral_report(map_, weight, options["m_list"], options["n_range"], options["bin_policy"],
                             options["depth"], options["bv_n"], table)
    suite = VerificationSuite(map_, weight, table, config, options["seed"], n_range=options["n_range"])
    results = safe_analyze(suite, "all")
    failures = summarize_failures(results)
    tables = {"orbits": orbit_rows(table, map_, weight)}
    if not table.markov:
        tables["lambda"] = _lambda_rows(map_, weight, table, options["n_range"], options["tail_fraction"])
    tables.update(_ulam_tables(report))
    tables.update({f"verify_{name}": r["rows"] for name, r in results.items()})
    notes = [
        f"status: {table.status}",
        f"Lambda^inf = {format_scalar(report.lambda_inf)}, Lambda^sup = {format_scalar(report.lambda_sup)}",
        f"BV radius = {format_scalar(report.bv_radius)}",
    ] + [f"{name}: FAILED" for name in failures]
    return {"tables": tables, "notes": notes, "plot": report, "passed": not failures}


def execute_run(config, command, options):
    """
    Core logic for one command: compute, render and export.
    Returns {"summary", "exported_files", "passed"}.
    """
    summary = []
    logging.info(f"--- Starting {command} ---")
    handlers = {
        "orbits": lambda: _orbits(options),
        "lambda": lambda: _lambda(options),
        "bv-radius": lambda: _bv_radius(options),
        "example-gap": lambda: _example_gap(options),
        "verify": lambda: _verify(options, config),
        "ulam": lambda: _ulam(options),
        "report": lambda: _full_report(options, config),
    }
    results = handlers[command]()
    title = f"{command}: {options.get('map', 'example family')}" if command != "example-gap" else "example-gap"
    results = {"title": title, "header": _header(command, options), **results}

    reporter = Reporter(results, config, options.get("output_dir"))
    report_content = reporter.generate_report()
    filename = command.replace("-", "_") if command != "verify" else f"verify_{options['suite'].replace('-', '_')}"
    formats = list(options.get("formats", ["md", "json", "csv"]))
    if results.get("plot") is not None and "svg" not in formats:
        formats.append("svg")
    exported_files, error_messages = reporter.export_report(report_content, filename=filename, formats=formats)

    summary.extend(results.get("notes", []))
    for f in exported_files:
        summary.append(f"Report exported to {f}")
    summary.extend(error_messages)
    passed = results.get("passed", True)
    if results.get("passed") is not None:
        summary.append("Verification passed." if passed else "Verification FAILED.")
    return {"summary": summary, "exported_files": exported_files, "passed": passed}
