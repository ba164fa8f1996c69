"""Figure rendering for benchmark summaries (files only, non-interactive backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402


def plot_summary(summary: list[dict], x: str, path, title: str = "") -> None:
    """Mean topology error with one-std bars against the sweep axis ``x``.

    One curve per method; when ``x`` is ``P`` or ``budget`` curves are further
    split by ``M``.
    """
    series: dict[str, list[tuple[float, float, float]]] = {}
    for row in summary:
        key = row["method"] if x == "M" else f"{row['method']}, M={row['M']}"
        if row[x] is None or math.isnan(row["topology_mean"]):
            continue
        series.setdefault(key, []).append((row[x], row["topology_mean"], row["topology_std"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, pts in sorted(series.items()):
        pts.sort()
        xs, ms, ss = zip(*pts)
        ax.errorbar(xs, ms, yerr=ss, marker="o", capsize=3, label=key)
    if x in ("P", "budget"):
        ax.set_xscale("log")
    else:
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    if any(m > 0 for pts in series.values() for _, m, _ in pts):
        ax.set_yscale("symlog", linthresh=1e-6)
    ax.set_xlabel({"M": "number of processes / pairs M", "P": "samples per process P",
                   "budget": "signal budget M x P"}[x])
    ax.set_ylabel("topology recovery error")
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize="small")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
