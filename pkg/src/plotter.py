import logging
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from src.numeric import to_float

# Fixed ids and no timestamp, so the same report always yields the same bytes.
matplotlib.rcParams["svg.hashsalt"] = "spectra"
matplotlib.rcParams["svg.fonttype"] = "none"

EIGENVALUE_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b")


def _circle(ax, radius, **kwargs):
    theta = np.linspace(0.0, 2.0 * np.pi, 361)
    ax.plot(radius * np.cos(theta), radius * np.sin(theta), **kwargs)


def emit_plot(report, path):
    """
    Writes the eigenvalue scatter of a SpectralReport as SVG, with a dashed
    circle at Lambda^inf and a solid circle at the BV radius. Equal radii are
    drawn once and annotated.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lam = to_float(report.lambda_inf)
    bv = to_float(report.bv_radius)

    fig, ax = plt.subplots(figsize=(6, 6))
    for index, spectrum in enumerate(report.spectra):
        values = np.asarray(spectrum.eigenvalues)
        if values.size == 0:
            continue
        ax.scatter(values.real, values.imag, s=10, alpha=0.7,
                   c=EIGENVALUE_COLORS[index % len(EIGENVALUE_COLORS)], label=f"Ulam M={spectrum.M}")

    depth_note = f"K={report.depth}"
    if abs(lam - bv) <= 1e-12 * max(1.0, abs(bv)):
        _circle(ax, bv, color="black", linewidth=1.2,
                label=f"Lambda^inf = BV radius = {bv:.6g} ({depth_note}, n={report.bv_n})")
        ax.annotate("Lambda^inf = BV radius", xy=(bv / np.sqrt(2), bv / np.sqrt(2)),
                    xytext=(8, 8), textcoords="offset points", fontsize=8)
    else:
        _circle(ax, lam, color="black", linestyle="--", linewidth=1.0,
                label=f"Lambda^inf = {lam:.6g} ({depth_note})")
        _circle(ax, bv, color="black", linewidth=1.2, label=f"BV radius = {bv:.6g} (n={report.bv_n})")

    extent = max(1.05, bv * 1.1, lam * 1.1)
    ax.set_xlim(-extent, extent)
    ax.set_ylim(-extent, extent)
    ax.set_aspect("equal")
    ax.axhline(0.0, color="#cccccc", linewidth=0.5)
    ax.axvline(0.0, color="#cccccc", linewidth=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    markov = " (Markov)" if report.markov else ""
    ax.set_title(f"{report.map_name}{markov}, weight {report.weight_label}")
    ax.legend(fontsize=7, loc="lower left")

    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logging.info(f"Plot written to {path.resolve()}")
    return str(path.resolve())
