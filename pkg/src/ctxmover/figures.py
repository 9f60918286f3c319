"""Figure rendering for evaluation reports (file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def bar_chart(labels, values, path, title="", ylabel=""):
    """Render one bar per dataset next to the delimited report.

    Entries with value None are drawn at zero with a hatched face so gaps in
    the evaluation stay visible.
    """
    heights = [0.0 if v is None else float(v) for v in values]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(labels) + 2.0), 3.6))
    bars = ax.bar(range(len(labels)), heights, color="#4878a8")
    for bar, value in zip(bars, values):
        if value is None:
            bar.set_hatch("//")
            bar.set_facecolor("#cccccc")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
