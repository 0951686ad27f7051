"""Figure construction: heatmaps, time series, histogram overlays.

Each renderer takes a FigureSpec pointing at one CSV table written by
the simulator and saves one image. Energy clipping is a display
operation: the color scale saturates at the clip value while the quoted
data range in the figure text stays unclipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import TableError, pivot, read_summary, read_table

KINDS = ("heatmap", "timeseries", "histogram")

# per-kind default observable column
_DEFAULT_OBSERVABLE = {"heatmap": "e_kin", "timeseries": "e_kin",
                       "histogram": "count"}


@dataclass
class FigureSpec:
    """One figure request: what to read, what to draw, where to save."""

    kind: str
    input: Path
    output: Path
    observable: str | None = None
    clip: float | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.clip is not None and not self.clip > 0.0:
            raise ValueError(f"clip must be > 0, got {self.clip}")
        self.input = Path(self.input)
        self.output = Path(self.output)
        if self.observable is None:
            self.observable = _DEFAULT_OBSERVABLE[self.kind]


def render(spec: FigureSpec) -> Path:
    """Render one figure and return the written image path."""
    out = _RENDERERS[spec.kind](spec)
    return out


def _edges(centers):
    """Cell edges for pcolormesh from sorted-or-not center values."""
    c = np.asarray(centers, dtype=float)
    if len(c) == 1:
        half = 0.5 if c[0] == 0.0 else 0.5 * abs(c[0])
        return np.array([c[0] - half, c[0] + half])
    mid = 0.5 * (c[1:] + c[:-1])
    first = c[0] - (mid[0] - c[0])
    last = c[-1] + (c[-1] - mid[-1])
    return np.concatenate([[first], mid, [last]])


def _save(fig, spec):
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return spec.output


def render_heatmap(spec: FigureSpec) -> Path:
    table = read_table(spec.input)
    names = list(table)
    if len(names) < 3:
        raise TableError(f"{spec.input}: a scan table needs two axis "
                         f"columns plus observables, found {names}")
    ax1, ax2 = names[0], names[1]
    require_columns = (ax1, ax2, spec.observable)
    missing = [n for n in require_columns if n not in table]
    if missing:
        raise TableError(f"{spec.input}: missing column(s) "
                         f"{', '.join(missing)}; have {', '.join(names)}")

    v1s, v2s, grid = pivot(table, ax1, ax2, spec.observable)
    shown = np.ma.masked_invalid(grid)
    finite = grid[np.isfinite(grid)]
    title = spec.observable
    if spec.clip is not None and finite.size:
        data_max = finite.max()
        shown = np.ma.masked_invalid(np.minimum(grid, spec.clip))
        if data_max > spec.clip:
            title = (f"{spec.observable} (clipped at {spec.clip:g}, "
                     f"data max {data_max:.4g})")

    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    # axis1 varies along rows -> x axis; transpose for pcolormesh
    mesh = ax.pcolormesh(_edges(v1s), _edges(v2s), shown.T, shading="flat",
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=spec.observable)
    ax.set_xlabel(spec.xlabel or ax1)
    ax.set_ylabel(spec.ylabel or ax2)
    ax.set_title(title)
    return _save(fig, spec)


def render_timeseries(spec: FigureSpec) -> Path:
    table = read_table(spec.input)
    missing = [n for n in ("t", spec.observable) if n not in table]
    if missing:
        raise TableError(f"{spec.input}: missing column(s) "
                         f"{', '.join(missing)}; have {', '.join(table)}")

    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(table["t"], table[spec.observable], lw=1.2)
    if spec.clip is not None:
        ax.set_ylim(top=spec.clip)
    ax.set_xlabel(spec.xlabel or "t")
    ax.set_ylabel(spec.ylabel or spec.observable)
    ax.grid(alpha=0.3)
    return _save(fig, spec)


def render_histogram(spec: FigureSpec) -> Path:
    table = read_table(spec.input)
    needed = ("bin_left", "bin_right", "count", "potential_plus",
              "potential_minus")
    missing = [n for n in needed if n not in table]
    if missing:
        raise TableError(f"{spec.input}: missing column(s) "
                         f"{', '.join(missing)}; have {', '.join(table)}")

    left = table["bin_left"]
    width = table["bin_right"] - left
    centers = left + 0.5 * width
    counts = table["count"]

    summary = read_summary(spec.input.with_name("summary.json"))
    t_snap = summary.get("summary", {}).get("t_snapshot")

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    bars = ax.twinx()
    # bars behind, potential curves on top
    ax.set_zorder(bars.get_zorder() + 1)
    ax.patch.set_visible(False)
    bars.bar(left, counts, width=width, align="edge", color="0.78",
             edgecolor="0.55", linewidth=0.4)
    bars.set_ylabel("trajectories per bin", color="0.4")
    bars.tick_params(axis="y", colors="0.4")

    ax.plot(centers, table["potential_plus"], color="tab:blue", lw=1.6,
            label="V(x), Re a > 0")
    ax.plot(centers, table["potential_minus"], color="tab:orange", lw=1.6,
            label="V(x), Re a < 0")
    if spec.clip is not None:
        ax.set_ylim(-spec.clip, spec.clip)
    ax.set_xlabel(spec.xlabel or "k x / pi")
    ax.set_ylabel(spec.ylabel or "potential")
    ax.legend(loc="upper right", fontsize=8)
    if t_snap is not None:
        ax.set_title(f"position distribution at t = {t_snap:g}")
    return _save(fig, spec)


_RENDERERS = {"heatmap": render_heatmap, "timeseries": render_timeseries,
              "histogram": render_histogram}
