"""Static SVG regret curves from results CSVs."""

from __future__ import annotations

import os
from collections import defaultdict

import numpy as np

from .errors import ShapeMismatch
from .harness import read_csv

METRIC_LABELS = {
    "regret": "R_T",
    "realized_regret": "R'_T",
    "corruption": "C",
    "comm_values": "communicated values",
    "comm_messages": "messages",
}


def collect_curves(rows, metric="regret"):
    """Group rows into ``{(algo, adversary): (t, mean, stderr)}``.

    Every seed within a group must share the same checkpoint grid.
    """
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        groups[(r["algo"], r["adversary"])][r["seed"]].append(
            (r["t"], r[metric]))
    curves = {}
    for key, per_seed in sorted(groups.items()):
        seeds = sorted(per_seed)
        grids = [sorted(per_seed[s]) for s in seeds]
        t = np.array([p[0] for p in grids[0]])
        for g in grids[1:]:
            if not np.array_equal([p[0] for p in g], t):
                raise ShapeMismatch(f"{key[0]}/{key[1]}: seeds have "
                                    "different checkpoint grids")
        vals = np.array([[p[1] for p in g] for g in grids], dtype=float)
        mean = vals.mean(axis=0)
        if len(seeds) > 1:
            err = vals.std(axis=0, ddof=1) / np.sqrt(len(seeds))
        else:
            err = np.zeros_like(mean)
        curves[key] = (t, mean, err)
    return curves


def plot_csvs(paths, out_path, metric="regret", title=None):
    """Write one log-x SVG with a mean curve and stderr band per
    (algo, adversary) pair found in ``paths``."""
    if metric not in METRIC_LABELS:
        raise ValueError(f"unknown metric {metric!r}")
    rows = []
    for p in paths:
        rows += read_csv(p)
    if not rows:
        raise ShapeMismatch("no data rows in " + ", ".join(map(str, paths)))
    curves = collect_curves(rows, metric)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "coopbandit",
                                "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for (algo, adv), (t, mean, err) in curves.items():
            line, = ax.plot(t, mean, marker="o", ms=3, label=f"{algo} / {adv}")
            ax.fill_between(t, mean - err, mean + err, alpha=0.25,
                            color=line.get_color(), linewidth=0)
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(METRIC_LABELS[metric])
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", fontsize="small")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return curves
