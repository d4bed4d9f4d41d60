"""Figures written next to the CSV reports.

Rendering uses the Agg backend and strips PNG metadata so that reruns
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tram_filter import SizeHistogram, SweepPoint  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "attachnet",
}

_SWEEP_LABELS = {
    "bulk": "bulk email threshold (recipients)",
    "event_freq": "max unique emails per attachment",
    "sender_freq": "max unique senders per attachment",
    "size": "min attachment size (bytes)",
}


def _save(fig, path: Path) -> None:
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)


def plot_sweep(points: Sequence[SweepPoint], parameter: str, path: str | Path) -> Path:
    """Average degree (left axis) and clustering (right axis) against threshold."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        xs = [p.value for p in points]
        ax.plot(xs, [p.avg_degree for p in points], "o-", color="tab:blue", label="avg. degree")
        ax.set_xlabel(_SWEEP_LABELS.get(parameter, parameter))
        ax.set_ylabel("average degree", color="tab:blue")
        ax2 = ax.twinx()
        ax2.plot(xs, [p.avg_clustering for p in points], "s--", color="tab:red", label="avg. clustering")
        ax2.set_ylabel("average clustering", color="tab:red")
        ax2.set_ylim(0, 1.05)
        fig.tight_layout()
        _save(fig, path)
    return path


def plot_size_histogram(hist: SizeHistogram, path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        labels = [f"<={e}" for e in hist.edges] + [f">{hist.edges[-1]}" if hist.edges else "all"]
        ax.bar(range(len(hist.counts)), hist.counts, color="tab:gray")
        ax.set_xticks(range(len(hist.counts)))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_xlabel("attachment size (bytes)")
        ax.set_ylabel("distinct attachments")
        fig.tight_layout()
        _save(fig, path)
    return path
