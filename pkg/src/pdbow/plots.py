"""Figure rendering for report outputs.

Every CLI report path that writes delimited data also renders a matplotlib
figure next to it. Rendering is headless (Agg) and file-only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .classify import GridResult
from .persistence import Diagram

__all__ = ["plot_grid_result", "plot_stability_ratios", "plot_diagram"]


def plot_grid_result(path: str | Path, result: GridResult, title: str = "") -> None:
    """Accuracy vs codebook size, one errorbar line per encoder/weighting."""
    fig, ax = plt.subplots(figsize=(6, 4))
    series: dict[tuple[str, bool], list] = {}
    for r in result.rows:
        series.setdefault((r.encoder, r.weighted), []).append(r)
    for (enc, w), rows in sorted(series.items()):
        rows = sorted(rows, key=lambda r: r.n_words)
        ax.errorbar(
            [r.n_words for r in rows],
            [r.mean_accuracy for r in rows],
            yerr=[r.std_accuracy for r in rows],
            marker="o",
            markersize=3,
            capsize=2,
            linestyle="--" if w else "-",
            label=f"{enc}{', weighted' if w else ''}",
        )
    ax.set_xlabel("codebook size")
    ax.set_ylabel("mean accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_stability_ratios(
    path: str | Path, ratios: np.ndarray, constant: float
) -> None:
    """Histogram of observed perturbation ratios against the certified bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ratios = np.asarray(ratios)
    ax.hist(ratios, bins=60, color="steelblue", alpha=0.85)
    ax.axvline(constant, color="crimson", linestyle="--",
               label=f"certified bound C = {constant:.4g}")
    ax.set_xlabel("observed ratio  |raw(B) - raw(B')|_inf / W1(B, B')")
    ax.set_ylabel("trials")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_diagram(path: str | Path, diagram: Diagram, title: str = "") -> None:
    """Birth-persistence scatter of one diagram."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if len(diagram):
        ax.scatter(diagram.births, diagram.persistences, s=12, alpha=0.7)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("birth")
    ax.set_ylabel("persistence")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
