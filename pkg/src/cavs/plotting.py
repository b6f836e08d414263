"""Static SVG line charts of rate curves."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed salt and no date keep the SVG bytes reproducible
_RC = {"svg.hashsalt": "cavs", "svg.fonttype": "none", "font.family": "DejaVu Sans"}


def plot_curves(curves: Sequence, path, title: str = "") -> Path:
    """Log-log plot of error against ``n``, one series per curve, with fitted slopes."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for c in curves:
            pts = [(n, e) for n, e in zip(c.ns, c.errors) if e > 0]
            if not pts:
                continue
            ns, errs = zip(*pts)
            label = c.label if c.slope is None else f"{c.label} (slope {c.slope:.2f})"
            ax.plot(ns, errs, marker="o", label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("error")
        if title:
            ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
