"""Figure rendering for the CLI report paths (matplotlib, file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_power_curve(rows, path) -> None:
    """Rejection rate vs signal strength with Monte-Carlo error bars.

    rows: sequence of dicts with keys mu, rejection_rate, monte_carlo_stderr.
    """
    mus = [r["mu"] for r in rows]
    rates = [r["rejection_rate"] for r in rows]
    errs = [r["monte_carlo_stderr"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(mus, rates, yerr=errs, marker="o", capsize=3)
    ax.set_xlabel("signal strength")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.axhline(rows[0].get("alpha", 0.05), color="gray", ls="--", lw=0.8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pvalue_heatmap(p_matrix, path, names=None) -> None:
    """Symmetric p-value matrix as a heatmap."""
    p = np.asarray(p_matrix)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(p, vmin=0.0, vmax=1.0, cmap="viridis")
    fig.colorbar(im, ax=ax, label="p-value")
    ax.set_xlabel("node")
    ax.set_ylabel("node")
    if names is not None and len(names) <= 30:
        ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
        ax.set_yticks(range(len(names)), names, fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_adjacency(adjacency, path, names=None, title=None) -> None:
    """Boolean adjacency as a spy plot."""
    a = np.asarray(adjacency, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(a, cmap="Greys", vmin=0.0, vmax=1.0)
    ax.set_xlabel("node")
    ax.set_ylabel("node")
    if title:
        ax.set_title(title)
    if names is not None and len(names) <= 30:
        ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
        ax.set_yticks(range(len(names)), names, fontsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
