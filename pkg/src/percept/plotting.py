"""Figures written next to the delimited outputs (Agg backend, no display)."""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps re-runs byte-identical
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def plot_trace(path, t, stat, threshold=math.inf, change=None, alarm=None, label="statistic"):
    fig, ax = plt.subplots(figsize=(7, 3))
    s = np.where(np.isfinite(stat), stat, np.nan)
    ax.plot(t, s, lw=1, color="k", label=label)
    if math.isfinite(threshold):
        ax.axhline(threshold, color="tab:blue", ls=":", label="threshold")
    if change is not None:
        ax.axvline(change, color="tab:red", ls="--", label="change")
    if alarm is not None:
        ax.axvline(alarm, color="tab:green", ls="-", label="alarm")
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def plot_curves(path, rows):
    """EDD against log ARL, one line per (method, label)."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r["method"], r["label"])].append((r["log_ARL"], r["EDD"]))
    fig, ax = plt.subplots(figsize=(5, 4))
    for (method, label), pts in sorted(groups.items()):
        pts.sort()
        ax.plot(*zip(*pts), marker="o", label=f"{method} {label}")
    ax.set_xlabel("log ARL")
    ax.set_ylabel("EDD")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_diagram(path, diagram, title=""):
    fig, ax = plt.subplots(figsize=(4, 4))
    finite = np.isfinite(diagram.deaths)
    top = float(np.max(diagram.deaths[finite])) if finite.any() else 1.0
    top = max(top, float(np.max(diagram.births)) if len(diagram) else 0.0) * 1.05 or 1.0
    for k, marker in ((0, "o"), (1, "^")):
        sel = diagram.dims == k
        d = np.where(np.isfinite(diagram.deaths[sel]), diagram.deaths[sel], top)
        ax.scatter(diagram.births[sel], d, s=10, marker=marker, label=f"H{k}")
    ax.plot([0, top], [0, top], color="grey", lw=0.8)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_points(path, points, title=""):
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(points[:, 0], points[:, 1], s=6)
    ax.set_aspect("equal")
    ax.set_title(title)
    _save(fig, path)
