"""Matplotlib figures that accompany the delimited report tables."""

from __future__ import annotations

from typing import Iterable

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .aggregate import SweepPoint
from .redundancy import RedundancyEstimate


def sweep_figure(points: Iterable[SweepPoint]) -> Figure:
    """Precision, recall, and F against the voting threshold K."""
    pts = list(points)
    ks = [p.k for p in pts]
    fig = Figure(figsize=(6.4, 4.2))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    ax.plot(ks, [p.metrics.precision for p in pts], "o-", label="precision")
    ax.plot(ks, [p.metrics.recall for p in pts], "s-", label="recall")
    ax.plot(ks, [p.metrics.f1 for p in pts], "^-", label="F")
    ax.set_xlabel("voting threshold K")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.set_xticks(ks)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def redundancy_figure(estimates: Iterable[RedundancyEstimate]) -> Figure:
    """Mean best F (with stddev bars) against workers per document."""
    ests = list(estimates)
    ns = [e.n for e in ests]
    fig = Figure(figsize=(6.4, 4.2))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    ax.errorbar(
        ns,
        [e.mean_max_f for e in ests],
        yerr=[e.stddev_max_f for e in ests],
        fmt="o-",
        capsize=3,
    )
    ax.set_xlabel("workers per document N")
    ax.set_ylabel("max F (mean over repetitions)")
    ax.set_ylim(0.0, 1.05)
    ax.set_xticks(ns)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig: Figure, path: str, dpi: int = 150) -> None:
    fig.savefig(path, dpi=dpi)
