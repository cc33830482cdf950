"""Line figures from simulation CSV output.

Rendering is pure I/O: column values are plotted exactly as parsed, with no
numerical transformation beyond what the axes do.  Styling contract:
excitatory series in one consistent color, inhibitory in another, limit
curves solid, empirical curves dotted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ROLE_COLORS = {"excitatory": "tab:blue", "inhibitory": "tab:red"}
STYLE_LINES = {"solid": "-", "dotted": ":"}


class MissingColumn(KeyError):
    pass


class EmptyFigure(ValueError):
    pass


def read_series(path) -> Dict[str, np.ndarray]:
    """Parse one CSV (comment lines start with '#') into named columns."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(line for line in fh
                                          if not line.startswith("#"))
                if row]
    if not rows:
        raise ValueError("no data rows in %s" % path)
    names = [name.strip() for name in rows[0]]
    data = np.array([[float(tok) for tok in row] for row in rows[1:]])
    return {name: data[:, i] for i, name in enumerate(names)}


@dataclass(frozen=True)
class LineSpec:
    """One plotted curve: a column of one input file with its styling."""

    source: int          # index into FigureSpec.inputs
    column: str
    style: str           # "solid" (limit) or "dotted" (empirical)
    role: str            # "excitatory" or "inhibitory"
    panel: int = 0
    label: str = ""

    def __post_init__(self):
        if self.style not in STYLE_LINES:
            raise ValueError("style must be one of %s" % list(STYLE_LINES))
        if self.role not in ROLE_COLORS:
            raise ValueError("role must be one of %s" % list(ROLE_COLORS))


@dataclass(frozen=True)
class FigureSpec:
    inputs: Tuple[str, ...]
    lines: Tuple[LineSpec, ...]
    output: str
    panel_titles: Tuple[str, ...] = ("",)
    ylabel: str = "value"


def build(spec: FigureSpec):
    """Assemble the matplotlib figure; returns (figure, plotted-arrays).

    The returned list holds one (t, y) pair per line, exactly the arrays
    handed to the plot calls, so callers can verify nothing was recomputed.
    """
    if not spec.lines:
        raise EmptyFigure("a figure needs at least one line")
    tables = [read_series(path) for path in spec.inputs]
    for line in spec.lines:
        if line.source >= len(tables):
            raise IndexError("line references input %d of %d"
                             % (line.source, len(tables)))
        table = tables[line.source]
        for needed in ("t", line.column):
            if needed not in table:
                raise MissingColumn("column '%s' not in %s"
                                    % (needed, spec.inputs[line.source]))

    n_panels = max(line.panel for line in spec.lines) + 1
    fig, axes = plt.subplots(1, n_panels, figsize=(6.0 * n_panels, 4.0),
                             squeeze=False)
    plotted = []
    for line in spec.lines:
        table = tables[line.source]
        t, y = table["t"], table[line.column]
        ax = axes[0][line.panel]
        ax.plot(t, y, linestyle=STYLE_LINES[line.style],
                color=ROLE_COLORS[line.role],
                label=line.label or line.column)
        plotted.append((t, y))
    for panel in range(n_panels):
        ax = axes[0][panel]
        ax.set_xlabel("time")
        ax.set_ylabel(spec.ylabel)
        if panel < len(spec.panel_titles) and spec.panel_titles[panel]:
            ax.set_title(spec.panel_titles[panel])
        ax.legend(loc="best")
    fig.tight_layout()
    return fig, plotted


def render(spec: FigureSpec) -> str:
    """Write the figure image; returns the output path."""
    fig, _ = build(spec)
    try:
        fig.savefig(spec.output, dpi=110)
    finally:
        plt.close(fig)
    return spec.output
