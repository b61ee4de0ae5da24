"""Histogram and bound-curve figures for benchmark reports.

Each ``emit_*`` function writes a CSV with the plotted numbers and an SVG
figure next to it.  Figures are built on :class:`matplotlib.figure.Figure`
directly, so no global pyplot state is touched.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from blds.harness import BenchReport

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "svg.hashsalt": "blds",  # stable element ids, so reruns give identical files
    "svg.fonttype": "none",
}


class MissingR(KeyError):
    pass


def _save(fig: Figure, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def histogram_counts(ratios, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts over ``bins`` equal bins from ``min(1, smallest)`` to the largest ratio.

    When every ratio equals the lower edge the range is widened to one unit.
    """
    data = np.asarray(ratios, dtype=float)
    lo = min(1.0, float(data.min()))
    hi = float(data.max())
    if hi <= lo:
        hi = lo + 1.0
    return np.histogram(data, bins=bins, range=(lo, hi))


def emit_histogram(report: BenchReport, R: int, which: str, bins: int, out_dir) -> tuple[Path, Path]:
    if which not in ("greedy", "fast"):
        raise ValueError("which must be 'greedy' or 'fast'")
    rows = report.rows_for(R)
    if not rows:
        raise MissingR(f"report has no rows for R={R}")
    ratios = [r.ratio_g if which == "greedy" else r.ratio_f for r in rows]
    counts, edges = histogram_counts(ratios, bins)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"hist_{which}_R{R}"
    csv_path, svg_path = stem.with_suffix(".csv"), stem.with_suffix(".svg")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "count"])
        for c, a, b in zip(counts, edges[:-1], edges[1:]):
            w.writerow([repr(float(a)), repr(float(b)), int(c)])
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(3.4, 2.4))
        ax = fig.add_subplot()
        ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", edgecolor="black", linewidth=0.5)
        label = "h(I_g)/h(I*)" if which == "greedy" else "h(I_f)/h(I*)"
        ax.set_xlabel(label)
        ax.set_ylabel("instances")
        ax.set_title(f"R = {R}")
        fig.tight_layout()
        _save(fig, svg_path)
    return csv_path, svg_path


def bound_curve(report: BenchReport) -> list[tuple[int, float, float]]:
    return [
        (a["R"], a["mean_bound_d_log"], a["mean_fast_b"]) for a in report.aggregates()
    ]


def emit_bound_curve(report: BenchReport, out_dir) -> tuple[Path, Path]:
    points = bound_curve(report)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, svg_path = out / "bound_curve.csv", out / "bound_curve.svg"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R", "mean_greedy_bound", "mean_fast_bound"])
        for R, g, f in points:
            w.writerow([R, repr(g), repr(f)])
    Rs = [p[0] for p in points]
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(3.4, 2.4))
        ax = fig.add_subplot()
        ax.plot(Rs, [p[1] for p in points], marker="o", markersize=3, label="greedy, 1 + ln M'")
        ax.plot(Rs, [p[2] for p in points], marker="s", markersize=3,
                label=f"fast, (1 + ln z'([n]))/(1 - {report.epsilon})")
        ax.set_xlabel("R")
        ax.set_ylabel("mean bound")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, svg_path)
    return csv_path, svg_path
