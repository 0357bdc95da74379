"""Report figures as deterministic SVG files.

Figures are rendered headless (Agg) with a fixed SVG hash salt and no
creation date, so re-running a report reproduces the files byte for byte.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "hdeeg",
    "svg.fonttype": "path",
    "figure.figsize": (7.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def line_chart(path: str | Path, x: Sequence[float], series: Mapping[str, Sequence[float]],
               xlabel: str, ylabel: str, title: str = "", ylim: tuple[float, float] | None = None) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for name, ys in series.items():
            ax.plot(list(x), list(ys), marker="o", markersize=3, label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if ylim:
            ax.set_ylim(*ylim)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        return save(fig, path)


def bar_chart(path: str | Path, labels: Sequence[str], series: Mapping[str, Sequence[float]],
              ylabel: str, title: str = "", log: bool = False) -> Path:
    """Grouped bars, one group per label and one bar per series."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        n = max(len(series), 1)
        width = 0.8 / n
        for i, (name, ys) in enumerate(series.items()):
            xs = [j + (i - (n - 1) / 2) * width for j in range(len(labels))]
            ax.bar(xs, list(ys), width=width, label=name)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(list(labels), rotation=30, ha="right", fontsize="small")
        ax.set_ylabel(ylabel)
        if log:
            ax.set_yscale("log")
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        return save(fig, path)
