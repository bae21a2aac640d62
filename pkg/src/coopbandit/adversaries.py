"""Corruption strategies.

An adversary is called once per round with the history of completed rounds
and the fresh stochastic reward vectors (shape ``(V, K)``) and returns the
corrupted vectors the agents will observe. It never sees the arms chosen in
the round it is corrupting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .env import BERNOULLI, CONSTANT, BanditInstance
from .errors import ConfigError


class Adversary:
    """Base class. Subclasses override :meth:`corrupt`.

    ``idle`` tells the simulator that the adversary is the identity from now
    on, which lets it skip per-round calls.
    """

    name = "adversary"
    identity = False

    def reset(self, instance: BanditInstance, horizon: int, rng):
        self.instance = instance
        self.horizon = int(horizon)
        self.rng = rng
        self.spent = 0.0
        self.corrupted_rounds = 0

    @property
    def idle(self) -> bool:
        return False

    def corrupt(self, t, stochastic, history):
        raise NotImplementedError

    def summary(self) -> dict:
        return {"spent": self.spent, "corrupted_rounds": self.corrupted_rounds}


class NullAdversary(Adversary):
    """No corruption: the stochastic setting."""

    name = "null"
    identity = True

    @property
    def idle(self):
        return True

    def corrupt(self, t, stochastic, history):
        return stochastic


def null_adversary(history, stochastic):
    return stochastic


@dataclass
class FlipMeanConfig:
    """Parameters of the two-armed lower-bound adversary.

    ``start_interval`` is a positive interval index or ``"auto"``.
    """

    delta: float = 0.3
    alpha: float = 0.5
    b0: float = 1.0
    start_interval: Union[int, str] = 1

    def __post_init__(self):
        if not 0.25 < self.delta < 0.5:
            raise ConfigError("flip_mean delta must lie in (1/4, 1/2)",
                              key="adversary.delta")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("flip_mean alpha must lie in (0, 1)",
                              key="adversary.alpha")
        if not self.b0 > 0:
            raise ConfigError("flip_mean b0 must be positive",
                              key="adversary.b0")
        if self.start_interval != "auto":
            if isinstance(self.start_interval, bool) or \
                    int(self.start_interval) != self.start_interval or \
                    int(self.start_interval) < 1:
                raise ConfigError("start_interval must be a positive integer "
                                  "or 'auto'", key="adversary.start_interval")
            self.start_interval = int(self.start_interval)

    @property
    def y(self) -> float:
        return self.b0 / ((1.0 - self.alpha) * self.delta ** 2)

    @property
    def pull_threshold(self) -> float:
        return 4.0 * self.y

    @property
    def flip_probability(self) -> float:
        # (1/2 - d) + (1/2 + d) q = 1/2 + d
        return 2.0 * self.delta / (0.5 + self.delta)


def interval_bounds(horizon: int, alpha: float):
    """Last round of each interval; interval l spans 3^l * floor(T^alpha)."""
    base = math.floor(horizon ** alpha)
    if base < 1:
        raise ConfigError("floor(T^alpha) must be at least 1")
    ends = []
    end = 0
    level = 1
    while end < horizon:
        end = min(horizon, end + 3 ** level * base)
        ends.append(end)
        level += 1
    return np.array(ends, dtype=np.int64)


def lower_bound_instance(delta: float, num_agents: int) -> BanditInstance:
    """Arm 1 Bernoulli(1/2 - delta), arm 2 constant 1/2."""
    return BanditInstance([(BERNOULLI, 0.5 - delta), (CONSTANT, 0.5)],
                          num_agents)


class FlipMeanAdversary(Adversary):
    """Make the Bernoulli arm look like Bernoulli(1/2 + delta).

    Rewards of 1 are kept and rewards of 0 are flipped to 1 with probability
    ``2 delta / (1/2 + delta)``, the cheapest coupling that reaches the target
    marginal. Corruption starts in interval ``start_interval`` and stops for
    good once the pooled number of arm-1 pulls inside that interval exceeds
    ``4Y`` (the crossing round itself is still corrupted).
    """

    name = "flip_mean"

    def __init__(self, config: Optional[FlipMeanConfig] = None):
        self.config = config or FlipMeanConfig()

    def reset(self, instance, horizon, rng):
        super().reset(instance, horizon, rng)
        cfg = self.config
        arms = instance.arms
        if (instance.num_arms != 2 or arms[0].kind != BERNOULLI
                or arms[1].kind != CONSTANT
                or abs(arms[0].mean - (0.5 - cfg.delta)) > 1e-12
                or abs(arms[1].mean - 0.5) > 1e-12):
            raise ConfigError(
                "flip_mean needs arms [bernoulli(1/2 - delta), constant(1/2)] "
                f"with delta={cfg.delta}, got {instance!r}")
        self.ends = interval_bounds(horizon, cfg.alpha)
        self.start = None if cfg.start_interval == "auto" \
            else cfg.start_interval
        self.active = True
        self.interval_pulls = np.zeros(len(self.ends), dtype=np.int64)
        self._seen = 0  # rounds already folded into interval_pulls

    def interval_of(self, t: int) -> int:
        """1-based interval index of round t."""
        return int(np.searchsorted(self.ends, t, side="left")) + 1

    @property
    def idle(self):
        return not self.active

    def _catch_up(self, history):
        choices = history.choices()
        for s in range(self._seen + 1, history.t + 1):
            ell = self.interval_of(s)
            self.interval_pulls[ell - 1] += int(np.sum(choices[s - 1] == 0))
        self._seen = history.t

    def corrupt(self, t, stochastic, history):
        cfg = self.config
        if not self.active:
            return stochastic
        self._catch_up(history)
        ell = self.interval_of(t)
        if self.start is None:
            # auto: first interval whose predecessor saw at most 4Y pulls
            if ell >= 2 and self.interval_pulls[ell - 2] <= cfg.pull_threshold:
                self.start = ell
            else:
                return stochastic
        if ell < self.start:
            return stochastic
        if self.interval_pulls[self.start - 1] > cfg.pull_threshold:
            self.active = False   # after this last corrupted round
        out = stochastic.copy()
        u = self.rng.random(len(stochastic))
        flip = (stochastic[:, 0] == 0.0) & (u < cfg.flip_probability)
        out[flip, 0] = 1.0
        self.spent += float(np.sum(np.abs(out - stochastic).max(axis=1)))
        self.corrupted_rounds += 1
        return out

    def summary(self):
        info = super().summary()
        info.update(start_interval=self.start, active=self.active,
                    pull_threshold=self.config.pull_threshold,
                    start_interval_pulls=(
                        int(self.interval_pulls[self.start - 1])
                        if self.start else None))
        return info


class TargetedGapAdversary(Adversary):
    """Depress one arm by a fixed amount until a corruption budget is spent.

    Agents are charged in ascending order; once the running corruption cost
    reaches ``budget`` no further entries are touched, so the total never
    exceeds ``budget + depress``.
    """

    name = "targeted"

    def __init__(self, budget: float, target_arm: Optional[int] = None,
                 depress: float = 0.4):
        if budget < 0:
            raise ConfigError("budget must be nonnegative",
                              key="adversary.budget")
        if not 0.0 < depress <= 1.0:
            raise ConfigError("depress must lie in (0, 1]",
                              key="adversary.depress")
        self.budget = float(budget)
        self.target_arm = target_arm
        self.depress = float(depress)

    def reset(self, instance, horizon, rng):
        super().reset(instance, horizon, rng)
        if self.target_arm is None:
            self.target = instance.best_arm
        else:
            self.target = int(self.target_arm)
        if not 0 <= self.target < instance.num_arms:
            raise ConfigError(f"target arm {self.target} out of range",
                              key="adversary.target")

    @property
    def idle(self):
        return self.spent >= self.budget

    def corrupt(self, t, stochastic, history):
        if self.spent >= self.budget:
            return stochastic
        out = stochastic.copy()
        i = self.target
        touched = False
        for v in range(len(out)):
            if self.spent >= self.budget:
                break
            new = max(0.0, out[v, i] - self.depress)
            cost = out[v, i] - new
            out[v, i] = new
            self.spent += cost
            touched = True
        if touched:
            self.corrupted_rounds += 1
        return out


def make_adversary(kind: str, **params) -> Adversary:
    if kind in ("null", None, "none"):
        return NullAdversary()
    if kind == "flip_mean":
        return FlipMeanAdversary(FlipMeanConfig(**params))
    if kind == "targeted":
        return TargetedGapAdversary(**params)
    raise ConfigError(f"unknown adversary kind {kind!r}", key="adversary.kind")
