"""Report serialization: CSV tables, JSON payloads, matplotlib figures.

CSV files are RFC-4180-style (UTF-8, quoted where needed, header row), with
optional '#'-prefixed comment lines above the header carrying seeds.  JSON
payloads use stable key ordering.  Reports contain no timestamps, so reruns
with the same config and seeds are byte-identical; wall-clock duration lives
only in the run manifest.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .oscillatory import DecayScanReport


def write_csv(path, columns, rows, comments=()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return repr(obj)
    return obj


def decay_report_csv(path, report: DecayScanReport, comments=()) -> None:
    write_csv(
        path,
        report.columns,
        report.rows,
        comments=tuple(comments) + (f"bound: {report.bound_expression}",),
    )


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _finish(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_decay_figure(path, report: DecayScanReport, x_column: str, title: str) -> None:
    """Observed/claimed ratio against one parameter, one line per slice."""
    fig, ax = _new_axes(title, x_column, "magnitude / bound")
    slices = report.column(report.slice_column)
    xs = report.column(x_column).astype(float)
    mags = report.column("magnitude").astype(float)
    bounds = report.column("bound").astype(float)
    for val, _ in report.slice_max:
        mask = slices == val
        if "side" in report.columns:
            mask &= report.column("side") == "full"
        order = np.argsort(xs[mask])
        ax.loglog(xs[mask][order], (mags[mask] / bounds[mask])[order], marker=".",
                  label=f"{report.slice_column}={val}")
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_scaling_figure(path, fits: dict, title: str) -> None:
    """Log-log measured norms against N with the fitted slopes in the legend."""
    fig, ax = _new_axes(title, "N", "measured norm")
    for name, fit in fits.items():
        n = np.asarray(fit.n_values, dtype=float)
        ax.loglog(n, fit.values, marker="o",
                  label=f"{name}: slope {fit.slope:.3f} (claim {fit.claimed_exponent:.3f})")
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_series_figure(path, x, series: dict, title: str, xlabel: str, ylabel: str,
                       loglog: bool = True) -> None:
    fig, ax = _new_axes(title, xlabel, ylabel)
    plot = ax.loglog if loglog else ax.plot
    for name, ys in series.items():
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = (xs > 0) & (ys > 0) if loglog else np.ones_like(xs, dtype=bool)
        plot(xs[keep], ys[keep], marker=".", label=name)
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_ratio_scatter(path, groups: dict, title: str, xlabel: str, ylabel: str) -> None:
    """Scatter of per-sample ratios grouped by a parameter (e.g. N or rank)."""
    fig, ax = _new_axes(title, xlabel, ylabel)
    for name, (xs, ys) in groups.items():
        ax.semilogx(xs, ys, linestyle="none", marker="o", alpha=0.6, label=name)
    ax.legend(fontsize=8)
    _finish(fig, path)
