"""Figure rendering for the CLI report paths.

Every report-producing command drops a PNG next to its delimited output so
results can be eyeballed without a separate plotting step. Figures are
decorative duplicates of the CSV content, never the primary artifact.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, out_path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_series(out_path, dates, closes, returns, title="closing prices"):
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    axes[0].plot(dates, closes, lw=0.9, color="tab:blue")
    axes[0].set_title(title)
    axes[0].set_xlabel("date")
    axes[0].tick_params(axis="x", rotation=30)
    axes[1].plot(dates[1:], returns, lw=0.6, color="tab:orange")
    axes[1].set_title("log-returns")
    axes[1].set_xlabel("date")
    axes[1].tick_params(axis="x", rotation=30)
    return _finish(fig, out_path)


def render_metrics(out_path, rows):
    """rows: iterable of (step, mse, rmse, mae, split)."""
    fig, ax = plt.subplots(figsize=(6.4, 4))
    by_split = {}
    for step, mse, rmse, mae, split in rows:
        by_split.setdefault(split, []).append((step, mse, mae))
    for split, pts in sorted(by_split.items()):
        steps = [p[0] for p in pts]
        ax.semilogy(steps, [p[1] for p in pts], label=f"mse ({split})", lw=1.4)
        ax.semilogy(steps, [p[2] for p in pts], label=f"mae ({split})", lw=1.0, ls="--")
    ax.set_xlabel("training step")
    ax.set_ylabel("loss metric")
    ax.set_title("training metrics")
    ax.legend(fontsize=8)
    return _finish(fig, out_path)


def render_surface(out_path, surface):
    fig = plt.figure(figsize=(10, 4))
    ax1 = fig.add_subplot(1, 2, 1, projection="3d")
    tt, ss = np.meshgrid(surface.t_nodes, surface.s_dollars, indexing="ij")
    ax1.plot_surface(ss, tt, surface.values_dollars, cmap="viridis", alpha=0.9)
    ax1.set_xlabel("price")
    ax1.set_ylabel("remaining-time fraction")
    ax1.set_zlabel("option value")
    ax1.set_title(f"{surface.source} surface")
    ax2 = fig.add_subplot(1, 2, 2)
    for frac in (1.0 / 3.0, 2.0 / 3.0, 1.0):
        j = int(np.argmin(np.abs(surface.t_nodes - frac)))
        ax2.plot(surface.s_dollars, surface.values_dollars[j],
                 label=f"t={surface.t_nodes[j]:.3f}", lw=1.3)
    ax2.plot(surface.s_dollars, np.maximum(surface.s_dollars - surface.strike, 0.0),
             color="#777777", ls=":", lw=1.0, label="payoff")
    ax2.set_xlabel("price")
    ax2.set_ylabel("option value")
    ax2.legend(fontsize=8)
    return _finish(fig, out_path)


def render_sweep(out_path, taus, values):
    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    ax.plot(taus, values, marker="o", color="tab:blue")
    ax.set_xlabel("delay (years)")
    ax.set_ylabel("option value")
    ax.set_title("delay sweep")
    return _finish(fig, out_path)


def render_comparison(out_path, s_dollars, tables, t_rows):
    fig, axes = plt.subplots(1, len(t_rows), figsize=(4.2 * len(t_rows), 3.6), sharey=True)
    if len(t_rows) == 1:
        axes = [axes]
    for col, (ax, tr) in enumerate(zip(axes, t_rows)):
        for variant, mat in tables.items():
            ax.plot(s_dollars, mat[:, col], marker="o", ms=3, lw=1.2, label=variant)
        ax.set_title(f"t = {tr:.3f}")
        ax.set_xlabel("price")
        if col == 0:
            ax.set_ylabel("option value")
        ax.legend(fontsize=8)
    return _finish(fig, out_path)
