"""Regret, corruption and communication accounting over run logs.

All running sums accumulate in a fixed order (ascending round, then
ascending agent) with ``np.cumsum``, which is sequential, so results are
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ShapeMismatch


def default_checkpoints(horizon: int):
    """Geometric grid ceil(T/64) * 2^k inside [1, T], plus T."""
    base = -(-int(horizon) // 64)
    pts = {base * 2 ** k for k in range(7) if base * 2 ** k <= horizon}
    pts.add(int(horizon))
    return np.array(sorted(pts), dtype=np.int64)


def _check_points(log, checkpoints):
    cp = np.asarray(checkpoints, dtype=np.int64)
    if cp.ndim != 1 or np.any(cp < 1) or np.any(cp > log.rounds_completed):
        raise ShapeMismatch(f"checkpoints must lie in [1, "
                            f"{log.rounds_completed}]")
    return cp


def _running(per_round_agent, cp, V):
    """Running total over the flattened (t, v) order, read at round ends."""
    c = np.cumsum(per_round_agent.ravel())
    return c[cp * V - 1]


def pseudo_regret(log, instance, checkpoints):
    """Sum of mean gaps of the pulled arms."""
    cp = _check_points(log, checkpoints)
    t_max = int(cp.max())
    gaps = instance.gaps[log.choices[:t_max]]
    return _running(gaps, cp, instance.num_agents)


def realized_regret(log, checkpoints):
    """Best single arm in hindsight (corrupted rewards) minus the observed
    total. Returns NaN where the reward vectors were not retained."""
    cp = _check_points(log, checkpoints)
    t_max = int(cp.max())
    V = log.instance.num_agents
    got = _running(log.observed[:t_max], cp, V)
    if log.lean:
        return np.full(len(cp), np.nan)
    best = np.full(len(cp), -np.inf)
    for i in range(log.instance.num_arms):
        best = np.maximum(best, _running(log.corrupted[:t_max, :, i], cp, V))
    return best - got


def observed_reward(log, checkpoints):
    """Played-arm term of the realized regret (available in lean mode)."""
    cp = _check_points(log, checkpoints)
    return _running(log.observed[:int(cp.max())], cp, log.instance.num_agents)


def corruption_level(log, checkpoints):
    """Running corruption: sum over rounds and agents of the inf-norm gap."""
    cp = _check_points(log, checkpoints)
    return _running(log.inf_corruption[:int(cp.max())], cp,
                    log.instance.num_agents)


def epoch_corruption(log):
    """Per-epoch corruption: max over arms of the summed absolute gaps.

    Only (agent, arm) pairs where the agent held the arm in that epoch count.
    Needs full reward vectors and per-epoch arm sets; returns None otherwise.
    """
    if log.lean or not log.snapshots or \
            not hasattr(log.snapshots[0], "views"):
        return None
    out = []
    K = log.instance.num_arms
    for snap in log.snapshots:
        sl = slice(snap.start - 1, snap.end)
        diff = np.abs(log.corrupted[sl] - log.stochastic[sl]).sum(axis=0)
        held = np.zeros_like(diff, dtype=bool)
        for v, view in enumerate(snap.views):
            held[v, view.arms] = True
        per_arm = np.where(held, diff, 0.0).sum(axis=0)
        out.append(float(per_arm.max()) if K else 0.0)
    return np.array(out)


def corruption_totals(log):
    """Total corruption C and the per-epoch C(tau) array (or None)."""
    total = float(np.cumsum(log.inf_corruption.ravel())[-1]) \
        if log.inf_corruption.size else 0.0
    return total, epoch_corruption(log)


def comm_cost(log, checkpoints=None):
    """Cumulative communicated values and messages.

    Returns totals when ``checkpoints`` is None, otherwise two arrays read at
    the checkpoints (an exchange at the end of round t counts from t on).
    """
    events = log.comm_events
    if checkpoints is None:
        return (sum(e[1] for e in events), sum(e[2] for e in events))
    cp = np.asarray(checkpoints, dtype=np.int64)
    vals = np.zeros(len(cp), dtype=np.int64)
    msgs = np.zeros(len(cp), dtype=np.int64)
    for t, v, m in events:
        hit = cp >= t
        vals[hit] += v
        msgs[hit] += m
    return vals, msgs


@dataclass
class MetricsSeries:
    checkpoints: np.ndarray
    regret: np.ndarray
    realized_regret: np.ndarray
    corruption: np.ndarray
    comm_values: np.ndarray
    comm_messages: np.ndarray
    epoch: np.ndarray
    epoch_corruption: Optional[np.ndarray] = None
    seed: Optional[int] = None


def compute_series(log, checkpoints=None) -> MetricsSeries:
    if checkpoints is None:
        checkpoints = default_checkpoints(log.rounds_completed)
    cp = np.asarray(checkpoints, dtype=np.int64)
    vals, msgs = comm_cost(log, cp)
    return MetricsSeries(
        checkpoints=cp,
        regret=pseudo_regret(log, log.instance, cp),
        realized_regret=realized_regret(log, cp),
        corruption=corruption_level(log, cp),
        comm_values=vals,
        comm_messages=msgs,
        epoch=np.array([log.segment_of(int(t)) for t in cp], dtype=np.int64),
        epoch_corruption=epoch_corruption(log),
        seed=log.seed,
    )


@dataclass
class Aggregate:
    checkpoints: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    quantiles: dict


def aggregate(values: Sequence[np.ndarray], checkpoints,
              qs=(0.1, 0.5, 0.9)) -> Aggregate:
    arr = np.asarray(values, dtype=float)
    n = len(arr)
    mean = arr.mean(axis=0)
    if n > 1:
        stderr = arr.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros_like(mean)
    quant = {q: np.quantile(arr, q, axis=0) for q in qs}
    return Aggregate(np.asarray(checkpoints), mean, stderr, quant)


def aggregate_over_seeds(series: Sequence[MetricsSeries], qs=(0.1, 0.5, 0.9)):
    """Per-checkpoint mean / standard error / quantiles of every metric.

    The seed mean of the realized regret is the empirical estimate of the
    expected adversarial-regime regret.
    """
    if len(series) < 2:
        raise ShapeMismatch("need at least two series to aggregate")
    grid = series[0].checkpoints
    for s in series[1:]:
        if not np.array_equal(s.checkpoints, grid):
            raise ShapeMismatch("series have different checkpoint grids")
    out = {}
    for name in ("regret", "realized_regret", "corruption", "comm_values",
                 "comm_messages"):
        out[name] = aggregate([getattr(s, name) for s in series], grid, qs)
    out["mean_realized_regret"] = out["realized_regret"].mean
    return out
