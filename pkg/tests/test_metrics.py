from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopbandit.adversaries import Adversary
from coopbandit.baselines import UCB1
from coopbandit.cbarc import run_cbarc
from coopbandit.env import BanditInstance, RunLog, simulate
from coopbandit.errors import ShapeMismatch
from coopbandit.metrics import (aggregate, aggregate_over_seeds, comm_cost,
                                compute_series, corruption_level,
                                corruption_totals, default_checkpoints,
                                epoch_corruption, pseudo_regret,
                                realized_regret)


def scripted_log(means, choices, stochastic, corrupted):
    """RunLog built directly from per-round arrays."""
    choices = np.asarray(choices)
    stochastic = np.asarray(stochastic, dtype=float)
    corrupted = np.asarray(corrupted, dtype=float)
    T, V = choices.shape
    inst = BanditInstance.bernoulli(means, V)
    log = RunLog(inst, T)
    observed = corrupted[np.arange(T)[:, None], np.arange(V)[None, :], choices]
    inf = np.abs(corrupted - stochastic).max(axis=2)
    log.write(1, choices, stochastic, corrupted, observed, inf)
    return log


def brute_force(means, choices, stochastic, corrupted):
    """Pseudo-regret, realized regret and corruption straight from their
    definitions in exact rational arithmetic."""
    mu = [Fraction(m) for m in means]
    best = max(mu)
    T, V = len(choices), len(choices[0])
    K = len(means)
    R = sum(best - mu[choices[t][v]] for t in range(T) for v in range(V))
    per_arm = [sum(Fraction(corrupted[t][v][i]) for t in range(T)
                   for v in range(V)) for i in range(K)]
    got = sum(Fraction(corrupted[t][v][choices[t][v]]) for t in range(T)
              for v in range(V))
    C = sum(max(abs(Fraction(corrupted[t][v][i]) - Fraction(stochastic[t][v][i]))
                for i in range(K)) for t in range(T) for v in range(V))
    return R, max(per_arm) - got, C


dyadic = st.integers(0, 16).map(lambda k: k / 16)


@st.composite
def scripted(draw):
    K = draw(st.integers(1, 4))
    V = draw(st.integers(1, K))
    T = draw(st.integers(1, 10))
    means = draw(st.lists(dyadic, min_size=K, max_size=K))
    choices = draw(st.lists(st.lists(st.integers(0, K - 1), min_size=V,
                                     max_size=V), min_size=T, max_size=T))
    vec = st.lists(st.lists(st.lists(dyadic, min_size=K, max_size=K),
                            min_size=V, max_size=V), min_size=T, max_size=T)
    return means, choices, draw(vec), draw(vec)


@settings(max_examples=200, deadline=None)
@given(scripted())
def test_metrics_match_brute_force(case):
    means, choices, stoch, corr = case
    log = scripted_log(means, choices, stoch, corr)
    T = len(choices)
    R, Rp, C = brute_force(means, choices, stoch, corr)
    assert Fraction(float(pseudo_regret(log, log.instance, [T])[0])) == R
    assert Fraction(float(realized_regret(log, [T])[0])) == Rp
    assert Fraction(float(corruption_level(log, [T])[0])) == C


def test_pseudo_regret_examples():
    log = scripted_log([0.75, 0.5], [[0]] * 3, np.zeros((3, 1, 2)),
                       np.zeros((3, 1, 2)))
    assert pseudo_regret(log, log.instance, [3])[0] == 0.0
    log = scripted_log([0.7, 0.5], [[1, 1]] * 3, np.zeros((3, 2, 2)),
                       np.zeros((3, 2, 2)))
    assert pseudo_regret(log, log.instance, [3])[0] == pytest.approx(1.2)
    log = scripted_log([1.0, 0.5], [[1], [0], [1]], np.zeros((3, 1, 2)),
                       np.zeros((3, 1, 2)))
    assert pseudo_regret(log, log.instance, [3])[0] == 1.0


def test_realized_regret_examples():
    r = [[[0.9, 0.1]], [[0.9, 0.1]]]
    log = scripted_log([0.9, 0.1], [[1], [1]], r, r)
    assert realized_regret(log, [2])[0] == pytest.approx(1.6)
    log = scripted_log([0.9, 0.1], [[0], [0]], r, r)
    assert realized_regret(log, [2])[0] == 0.0


def test_inflating_unplayed_arm():
    s = [[[0.5, 0.25]]] * 4
    c = [[[0.5, 1.0]]] * 4
    base = scripted_log([0.5, 0.25], [[0]] * 4, s, s)
    hit = scripted_log([0.5, 0.25], [[0]] * 4, s, c)
    assert realized_regret(hit, [4])[0] > realized_regret(base, [4])[0]
    assert pseudo_regret(hit, hit.instance, [4])[0] == \
        pseudo_regret(base, base.instance, [4])[0]


def test_null_run_realized_regret_uses_stochastic_vectors():
    inst = BanditInstance.bernoulli([0.6, 0.4], 1)
    log = simulate(UCB1(), inst, None, 10, seed=0)
    assert log.corrupted is log.stochastic
    best = log.stochastic[:, 0, :].sum(axis=0).max()
    expect = best - log.observed.sum()
    assert realized_regret(log, [10])[0] == expect
    assert corruption_totals(log)[0] == 0.0


def test_corruption_round_contribution():
    s = [[[0.5, 0.5], [0.25, 0.25]]]
    c = [[[0.75, 0.5], [0.25, 0.25]]]
    log = scripted_log([0.5, 0.5], [[0, 0]], s, c)
    assert corruption_level(log, [1])[0] == 0.25


class Shift(Adversary):
    """Raise arm 1 by 0.25 on every agent."""

    def corrupt(self, t, stochastic, history):
        out = stochastic.copy()
        out[:, 1] = np.minimum(1.0, out[:, 1] + 0.25)
        return out


def test_corruption_additive_over_epochs():
    inst = BanditInstance.bernoulli([0.8, 0.5, 0.4], 2)
    log = run_cbarc(inst, Shift(), 20000, seed=0)
    total, _ = corruption_totals(log)
    by_epoch = sum(log.inf_corruption[s.start - 1:s.end].sum()
                   for s in log.snapshots)
    assert total == pytest.approx(by_epoch, rel=1e-12)


def test_epoch_corruption_is_max_over_arms():
    inst = BanditInstance.bernoulli([0.8, 0.5, 0.4], 2)
    log = run_cbarc(inst, Shift(), 20000, seed=0)
    per_epoch = epoch_corruption(log)
    for snap, c in zip(log.snapshots, per_epoch):
        sl = slice(snap.start - 1, snap.end)
        diff = np.abs(log.corrupted[sl] - log.stochastic[sl]).sum(axis=0)
        held = np.zeros_like(diff, dtype=bool)
        for v, view in enumerate(snap.views):
            held[v, view.arms] = True
        assert c == pytest.approx(np.where(held, diff, 0).sum(axis=0).max())
    assert epoch_corruption(run_cbarc(inst, Shift(), 2000, lean=True)) is None


def test_comm_cost_formula():
    inst = BanditInstance.bernoulli([0.9, 0.5, 0.2, 0.1], 2)
    log = run_cbarc(inst, None, 30000, seed=0, lean=True)
    vals, msgs = comm_cost(log)
    n_full = sum(not s.truncated for s in log.snapshots)
    k = 3
    assert vals == 2 * (2 * k + 1) + n_full * 2 * (5 * k + 1)
    assert msgs == 4 + n_full * 6
    cp = np.array([1, 30000])
    v_cp, _ = comm_cost(log, cp)
    assert v_cp[-1] == vals and v_cp[0] == 2 * (2 * k + 1)


def test_lean_realized_regret_unavailable():
    inst = BanditInstance.bernoulli([0.6, 0.4], 1)
    log = simulate(UCB1(), inst, None, 100, seed=0, lean=True)
    assert np.isnan(realized_regret(log, [100])[0])
    series = compute_series(log)
    assert np.all(np.isnan(series.realized_regret))
    assert np.all(np.isfinite(series.regret))


def test_default_checkpoints():
    assert default_checkpoints(640).tolist() == [10, 20, 40, 80, 160, 320,
                                                 640]
    assert default_checkpoints(1000).tolist() == [16, 32, 64, 128, 256, 512,
                                                  1000]
    assert default_checkpoints(5).tolist() == [1, 2, 4, 5]


def test_checkpoints_out_of_range():
    inst = BanditInstance.bernoulli([0.6, 0.4], 1)
    log = simulate(UCB1(), inst, None, 10, seed=0)
    with pytest.raises(ShapeMismatch):
        pseudo_regret(log, inst, [11])


def test_aggregate_examples():
    a = aggregate([np.array([1.0, 2.0]), np.array([1.0, 2.0])], [1, 2])
    assert a.mean.tolist() == [1.0, 2.0] and a.stderr.tolist() == [0.0, 0.0]
    b = aggregate([np.array([1.0]), np.array([3.0])], [1])
    assert b.mean[0] == 2.0 and b.stderr[0] == pytest.approx(1.0)
    c = aggregate([np.array([v]) for v in (1.0, 2.0, 3.0)], [1])
    assert c.quantiles[0.5][0] == 2.0


def test_aggregate_over_seeds_checks():
    inst = BanditInstance.bernoulli([0.6, 0.4], 1)
    s1 = compute_series(simulate(UCB1(), inst, None, 100, seed=0))
    s2 = compute_series(simulate(UCB1(), inst, None, 100, seed=1))
    out = aggregate_over_seeds([s1, s2])
    assert out["regret"].mean[-1] == pytest.approx(
        (s1.regret[-1] + s2.regret[-1]) / 2)
    with pytest.raises(ShapeMismatch):
        aggregate_over_seeds([s1])
    s3 = compute_series(simulate(UCB1(), inst, None, 100, seed=2), [50, 100])
    with pytest.raises(ShapeMismatch):
        aggregate_over_seeds([s1, s3])
