"""
SVG figures from saved reports.

- error-vs-alpha: empirical error curve of each validity report against the min(1, 1/alpha) envelope.
- region-size: size of the estimated region and of the oracle region along the alpha grid, per alternative (region.json).
- sweep: E[p_y/F_y] per label, one series per regularization constant, with the bound at 1.
"""

import json

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({"svg.hashsalt": "causal-econf", "axes.unicode_minus": False})
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from source.configuration import logging  # noqa: E402
from source.errors import MissingField  # noqa: E402

PLOT_KINDS = ("error-vs-alpha", "region-size", "sweep")


def load_report(path):
    with open(path, encoding="utf-8") as report_file:
        try:
            return json.load(report_file)
        except json.JSONDecodeError as e:
            raise MissingField(f"Report {path} is not valid JSON: {e}")


def _field(data, key, where):
    if not isinstance(data, dict) or key not in data:
        raise MissingField(f"Report {where} has no field {key!r}")
    return data[key]


def _error_curves(report, where):
    curves = []
    for index, result in enumerate(_field(report, "results", where)):
        curve = _field(result, "error_curve", where)
        label = result.get("alternative", f"run {index}")
        curves.append((label, np.asarray(_field(curve, "alpha", where), dtype=float),
                       np.asarray(_field(curve, "rate", where), dtype=float)))
    return curves


def _plot_error_vs_alpha(ax, reports):
    grid = None
    for where, report in reports:
        for label, alphas, rates in _error_curves(report, where):
            ax.plot(alphas, rates, marker=".", label=f"{label}")
            grid = alphas if grid is None else np.union1d(grid, alphas)
    if grid is None:
        raise MissingField("No error curve found in the given reports")
    ax.plot(grid, np.minimum(1.0, 1.0 / grid), color="black", linestyle="--", label="min(1, 1/alpha)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("alpha")
    ax.set_ylabel("P(Y outside region)")


def _plot_region_size(ax, reports):
    plotted = False
    for where, report in reports:
        for alternative in _field(report, "alternatives", where):
            curve = _field(alternative, "size_curve", where)
            if not curve:
                raise MissingField(f"Report {where} has an empty size_curve")
            name = alternative.get("alternative", "Q")
            alphas = [float(_field(point, "alpha", where)) for point in curve]
            ax.step(alphas, [_field(point, "estimated", where) for point in curve], where="post", label=f"estimated ({name})")
            oracle = [point.get("oracle") for point in curve]
            if all(size is not None for size in oracle):
                ax.step(alphas, oracle, where="post", linestyle="--", label=f"oracle ({name})")
            plotted = True
    if not plotted:
        raise MissingField("No region report given")
    ax.set_xscale("log")
    ax.set_xlabel("alpha")
    ax.set_ylabel("region size")


def _plot_sweep(ax, reports):
    series = 0
    for where, report in reports:
        for row in _field(report, "results", where):
            estimates = _field(row, "reports", where)
            labels = [r.get("y", index) for index, r in enumerate(estimates)]
            ax.errorbar(labels, [float(_field(r, "estimate", where)) for r in estimates],
                        yerr=[float(_field(r, "stderr", where)) for r in estimates],
                        marker="o", capsize=3, label=f"c={_field(row, 'c', where):g}")
            series += 1
    if not series:
        raise MissingField("No sweep rows found in the given reports")
    ax.axhline(1.0, color="black", linestyle="--", label="bound")
    ax.set_xlabel("y")
    ax.set_ylabel("E[p_y / F_y]")


def plot_reports(reports, kind, path):
    """
    Draw `kind` from a list of (name, report dict) pairs and save it as SVG at `path`.
    Raises MissingField when a report lacks what the figure needs.
    """
    if kind not in PLOT_KINDS:
        raise MissingField(f"Unknown plot kind {kind!r}. Available kinds: {', '.join(PLOT_KINDS)}")
    if not reports:
        raise MissingField("No report to plot")

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if kind == "error-vs-alpha":
            _plot_error_vs_alpha(ax, reports)
        elif kind == "region-size":
            _plot_region_size(ax, reports)
        else:
            _plot_sweep(ax, reports)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logging.info(f"Plot {kind} saved: {path}")
    return path
