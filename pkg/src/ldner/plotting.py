"""
Figures written next to text reports: per-category F1 bars and the training loss curve.

Uses the object-oriented matplotlib API so no GUI backend is ever needed.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from .evaluation import ScoreReport

FONT_SIZE = 10


def _figure(width=6.4, height=None):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    fig = Figure(figsize=(width, height or width * golden), dpi=100)
    return fig, fig.add_subplot(1, 1, 1)


def _style(ax):
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    ax.tick_params(labelsize=FONT_SIZE - 1)


def plot_f1_bars(report: ScoreReport, path: str | Path, title: str | None = None) -> Path:
    """Grouped entity/surface F1 bars per category plus Total, in percent."""
    names = list(report.categories) + ["Total"]
    ent = [report.entity[c].f1 for c in report.categories] + [report.entity_total.f1]
    surf = [report.surface[c].f1 for c in report.categories] + [report.surface_total.f1]
    x = np.arange(len(names))
    fig, ax = _figure(width=7.5)
    ax.bar(x - 0.2, 100 * np.array(ent), width=0.4, label="Entity F1", color="#4477aa")
    ax.bar(x + 0.2, 100 * np.array(surf), width=0.4, label="Surface F1", color="#ee6677")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(0, 105)
    ax.set_ylabel("F1 (%)")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, loc="upper left")
    _style(ax)
    fig.tight_layout()
    fig.savefig(path)
    return Path(path)


def plot_loss_curve(losses: Sequence[float], path: str | Path) -> Path:
    fig, ax = _figure()
    epochs = np.arange(1, len(losses) + 1)
    ax.plot(epochs, losses, color="#228833", lw=1.5)
    if len(losses) and min(losses) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean training NLL")
    _style(ax)
    fig.tight_layout()
    fig.savefig(path)
    return Path(path)


def figure_paths(report_path: str | Path) -> dict[str, Path]:
    """Where figures for a report at ``report_path`` go: ``<report>.f1.png`` etc."""
    p = Path(report_path)
    return {"f1": p.with_name(p.name + ".f1.png"), "loss": p.with_name(p.name + ".loss.png")}
