"""
Report figures rendered straight to files.

Uses the object-oriented ``Figure`` API with the Agg canvas, so no display or
global pyplot state is involved. Figures carry fixed metadata so identical
inputs give identical PNG bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["plot_basis_probabilities", "plot_batch_summary"]

_STYLE = {"dpi": 120}
_PNG_META = {"Software": None}


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    fig.savefig(path, metadata=_PNG_META if path.suffix.lower() == ".png" else None)
    return path


def plot_basis_probabilities(probs: Sequence[float], path: str | Path, title: str = "") -> Path:
    """Bar chart of measured-basis probabilities; bar 1 is the target projector."""
    p = np.asarray(probs, dtype=float)
    fig = Figure(figsize=(5.0, 3.2), **_STYLE)
    ax = fig.add_subplot()
    idx = np.arange(1, p.size + 1)
    colors = ["tab:blue"] + ["tab:gray"] * (p.size - 1)
    ax.bar(idx, p, color=colors)
    ax.set_xticks(idx)
    ax.set_xlabel("basis element $i$")
    ax.set_ylabel("$P_i$")
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_batch_summary(
    labels: Sequence[str],
    fidelity: Sequence[float],
    probability: Sequence[float],
    path: str | Path,
    reference_probability: Sequence[float] | None = None,
) -> Path:
    """Per-target fidelity (top) and post-selection probability (bottom)."""
    x = np.arange(len(labels))
    fig = Figure(figsize=(10.0, 5.5), **_STYLE)
    top, bottom = fig.subplots(2, 1, sharex=True)
    top.plot(x, fidelity, "o", color="tab:blue")
    top.axhline(0.999, color="tab:red", lw=0.8, ls="--")
    top.set_ylabel("fidelity")
    top.set_ylim(min(0.99, float(np.min(fidelity)) - 0.001), 1.0005)
    bottom.bar(x, probability, color="tab:blue", label="this run")
    if reference_probability is not None:
        bottom.plot(x, reference_probability, "_", color="k", ms=12, mew=2, label="reference")
        bottom.legend(loc="upper right", frameon=False)
    bottom.set_ylabel("success probability")
    bottom.set_xticks(x)
    bottom.set_xticklabels(labels, rotation=70, fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
