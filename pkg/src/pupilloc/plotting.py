"""Figures written next to the CSV reports.

Uses the object-oriented matplotlib API (no pyplot state), so it is safe to
call from worker threads and never opens a window.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .evaluation import EfficiencyCurve
from .image import GrayImage, PupilEstimate, Region

STYLE = {
    "cdf": dict(color="#1f77b4", marker="o", label="CDF"),
    "pf": dict(color="#d62728", marker="s", label="GPF"),
    "ea": dict(color="#2ca02c", marker="^", label="EA"),
}


def _style(name):
    return STYLE.get(name, dict(label=name))


def plot_efficiency_curves(curves: Mapping[str, EfficiencyCurve], path, title=None, markers=False):
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.add_subplot()
    for name, curve in curves.items():
        x, y = zip(*curve.points)
        style = dict(_style(name))
        if not markers:
            style.pop("marker", None)
        ax.plot(x, 100 * np.asarray(y), lw=1.6, ms=4, **style)
    ax.set_xlabel(r"$d_{max}$")
    ax.set_ylabel("efficiency [%]")
    ax.set_ylim(0, 102)
    ax.set_xlim(left=0)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def plot_efficiency_bars(curves: Mapping[str, EfficiencyCurve], path):
    """Grouped bars, one group per d_max level."""
    names = list(curves)
    levels = [x for x, _ in next(iter(curves.values())).points]
    width = 0.8 / max(len(names), 1)
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    pos = np.arange(len(levels))
    for i, name in enumerate(names):
        style = _style(name)
        vals = [100 * e for _, e in curves[name].points]
        ax.bar(pos + (i - (len(names) - 1) / 2) * width, vals, width,
               color=style.get("color"), label=f"{style['label']} (n={curves[name].evaluated_count})")
    ax.set_xticks(pos, [f"{x:g}" for x in levels])
    ax.set_xlabel(r"$d_{max}$")
    ax.set_ylabel("efficiency [%]")
    ax.set_ylim(0, 105)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def plot_locations(img: GrayImage, rois: Sequence[Region],
                   estimates: Mapping[str, Sequence[PupilEstimate | None]], path):
    """Overlay the ROIs and each algorithm's estimates on the image."""
    fig = Figure(figsize=(6.0, 6.0 * img.height / img.width))
    ax = fig.add_axes((0, 0, 1, 1))
    ax.imshow(img.pixels, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    for roi in rois:
        ax.add_patch(Rectangle((roi.x0 - 0.5, roi.y0 - 0.5), roi.width, roi.height,
                               fill=False, ec="yellow", lw=1))
    plotted = False
    for name, points in estimates.items():
        pts = [p for p in points if p is not None]
        if pts:
            style = _style(name)
            ax.plot([p.x for p in pts], [p.y for p in pts], ls="none", marker="+", ms=10,
                    mew=1.5, color=style.get("color"), label=style["label"])
            plotted = True
    ax.set_axis_off()
    if plotted:
        ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, dpi=100)
