import numpy as np
import pytest

from coopbandit.adversaries import (FlipMeanAdversary, FlipMeanConfig,
                                    NullAdversary, TargetedGapAdversary,
                                    interval_bounds, lower_bound_instance,
                                    make_adversary, null_adversary)
from coopbandit.cbarc import CBARC
from coopbandit.env import BanditInstance, RunLog, History, simulate
from coopbandit.errors import ConfigError
from coopbandit.metrics import corruption_totals


def test_null_identity():
    s = np.random.default_rng(0).random((3, 4))
    assert null_adversary(None, s) is s
    adv = NullAdversary()
    assert adv.corrupt(1, s, None) is s and adv.idle


def test_null_total_corruption_zero():
    inst = BanditInstance.bernoulli([0.6, 0.5, 0.4], 2)
    log = simulate(CBARC(), inst, NullAdversary(), 3000, seed=0)
    total, per_epoch = corruption_totals(log)
    assert total == 0.0 and np.all(per_epoch == 0.0)


def test_flip_mean_constants():
    cfg = FlipMeanConfig(delta=0.3, alpha=0.5, b0=1.0)
    assert cfg.flip_probability == pytest.approx(0.75)
    assert cfg.y == pytest.approx(1.0 / (0.5 * 0.09))
    assert cfg.pull_threshold == pytest.approx(88.888, abs=1e-3)
    # each corrupted agent-round moves the mean by 2 delta in expectation
    q = cfg.flip_probability
    assert (0.5 + cfg.delta) * q == pytest.approx(2 * cfg.delta)


@pytest.mark.parametrize("kw", [dict(delta=0.25), dict(delta=0.5),
                                dict(alpha=1.0), dict(b0=0.0),
                                dict(start_interval=0)])
def test_flip_mean_config_rejects(kw):
    with pytest.raises(ConfigError):
        FlipMeanConfig(**kw)


def test_interval_bounds():
    # floor(sqrt(100)) = 10; lengths 30, 90, 270 ...
    assert list(interval_bounds(100, 0.5)) == [30, 100]
    assert list(interval_bounds(10 ** 4, 0.5)[:3]) == [300, 1200, 3900]


def _history_with_pulls(inst, horizon, choices):
    log = RunLog(inst, horizon)
    n = len(choices)
    V, K = inst.num_agents, inst.num_arms
    z = np.zeros((n, V, K))
    log.write(1, np.asarray(choices), z, z, np.zeros((n, V)),
              np.zeros((n, V)))
    return History(log)


def test_flip_mean_pre_start_identity():
    inst = lower_bound_instance(0.3, 2)
    adv = FlipMeanAdversary(FlipMeanConfig(start_interval=2))
    adv.reset(inst, 10 ** 4, np.random.default_rng(0))
    s = np.array([[0.0, 0.5], [0.0, 0.5]])
    hist = _history_with_pulls(inst, 10 ** 4, np.zeros((9, 2), int))
    assert adv.corrupt(10, s, hist) is s


def test_flip_mean_stops_after_threshold():
    inst = lower_bound_instance(0.3, 1)
    adv = FlipMeanAdversary(FlipMeanConfig())
    adv.reset(inst, 10 ** 5, np.random.default_rng(0))
    s = np.array([[0.0, 0.5]])
    choices = np.zeros((200, 1), int)
    log = RunLog(inst, 10 ** 5)
    hist = History(log)
    corrupted_at = []
    for t in range(1, 201):
        out = adv.corrupt(t, s, hist)
        if out is not s:
            corrupted_at.append(t)
        z = np.zeros((1, 1, 2))
        log.write(t, choices[t - 1:t], z, z, np.zeros((1, 1)),
                  np.zeros((1, 1)))
    # 88.9 threshold: the round after the 89th pull is the last one touched
    assert corrupted_at == list(range(1, 91))
    assert adv.idle


def test_flip_mean_only_raises_arm_zero():
    inst = lower_bound_instance(0.3, 2)
    adv = FlipMeanAdversary(FlipMeanConfig())
    adv.reset(inst, 10 ** 4, np.random.default_rng(5))
    hist = _history_with_pulls(inst, 10 ** 4, np.zeros((0, 2), int))
    s = np.array([[0.0, 0.5], [1.0, 0.5]])
    out = adv.corrupt(1, s, hist)
    assert np.all(out[:, 1] == 0.5)
    assert np.all(out[:, 0] >= s[:, 0])
    assert set(np.unique(out[:, 0])) <= {0.0, 1.0}


def test_flip_mean_empirical_flip_rate():
    inst = lower_bound_instance(0.3, 1)
    adv = FlipMeanAdversary(FlipMeanConfig())
    adv.reset(inst, 10 ** 6, np.random.default_rng(1))
    hist = _history_with_pulls(inst, 10 ** 6, np.ones((0, 1), int))
    zeros = np.array([[0.0, 0.5]])
    flips = sum(adv.corrupt(t, zeros, hist)[0, 0] for t in range(1, 20001))
    assert flips / 20000 == pytest.approx(0.75, abs=0.015)


def test_flip_mean_requires_instance_shape():
    adv = FlipMeanAdversary(FlipMeanConfig())
    with pytest.raises(ConfigError):
        adv.reset(BanditInstance.bernoulli([0.2, 0.5], 1), 100,
                  np.random.default_rng(0))


def test_targeted_zero_budget_identity():
    adv = TargetedGapAdversary(budget=0.0)
    inst = BanditInstance.bernoulli([0.9, 0.7], 2)
    adv.reset(inst, 10, None)
    s = np.full((2, 2), 0.9)
    assert adv.idle and adv.corrupt(1, s, None) is s


def test_targeted_depress_and_floor():
    inst = BanditInstance.bernoulli([0.9, 0.7], 2)
    adv = TargetedGapAdversary(budget=100.0, depress=0.4)
    adv.reset(inst, 10, None)
    s = np.array([[0.9, 0.1], [0.2, 0.1]])
    out = adv.corrupt(1, s, None)
    assert out[0, 0] == pytest.approx(0.5)
    assert out[1, 0] == 0.0
    assert adv.spent == pytest.approx(0.4 + 0.2)


def test_targeted_budget_overshoot_bounded():
    inst = BanditInstance.bernoulli([0.9, 0.7, 0.7], 3)
    log = simulate(CBARC(), inst, TargetedGapAdversary(50.0, depress=0.4),
                   20000, seed=3)
    total, _ = corruption_totals(log)
    assert 50.0 <= total <= 50.4 + 1e-9


def test_make_adversary():
    assert make_adversary("null").name == "null"
    assert isinstance(make_adversary("flip_mean", delta=0.3),
                      FlipMeanAdversary)
    assert make_adversary("targeted", budget=3).budget == 3.0
    with pytest.raises(ConfigError):
        make_adversary("gremlin")
