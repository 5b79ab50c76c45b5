"""Figure rendering for report-style outputs.

Every report command also writes the underlying numbers as CSV; the PNGs
here are a convenience layer on top of the same curve objects.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_DPI = 120


def render_curves(curves: list, path, title: str = "", xlabel: str = "s (kCFA)") -> None:
    """Plot cdf-like curves with their confidence bands on one axis."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for curve in curves:
        (line,) = ax.plot(curve.grid, curve.values, label=curve.label or None)
        if curve.band is not None:
            ax.fill_between(
                curve.grid, curve.band.lower, curve.band.upper,
                alpha=0.2, color=line.get_color(), linewidth=0,
            )
        if curve.mask is not None and curve.mask.any():
            ax.plot(
                curve.grid[curve.mask], curve.values[curve.mask],
                linestyle="none", marker=".", color=line.get_color(), alpha=0.4,
            )
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cdf")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    if any(c.label for c in curves):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_cost_tables(tables: list, path, title: str = "transfer cost") -> None:
    """Plot marginal transfer and total cost against the expansion fraction."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for table in tables:
        ax1.plot(table.x, table.transfer, label=table.scheme or None)
        ax2.plot(table.x, table.cost_multiplier, label=table.scheme or None)
    ax1.set_xlabel("expansion fraction x")
    ax1.set_ylabel("marginal transfer (kCFA)")
    ax2.set_xlabel("expansion fraction x")
    ax2.set_ylabel("total transfer cost")
    if any(t.scheme for t in tables):
        ax1.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
