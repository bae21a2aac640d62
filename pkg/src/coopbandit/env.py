"""Reward generation, round execution and run logging.

Every agent sees a full reward vector each round. Stochastic draws come from
one random stream per (agent, arm) pair, so the reward sequence does not
depend on which algorithm or adversary is being simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AdversaryRangeViolation, ConfigError

BERNOULLI = "bernoulli"
CONSTANT = "constant"


@dataclass(frozen=True)
class ArmSpec:
    kind: str
    mean: float

    def __post_init__(self):
        if self.kind not in (BERNOULLI, CONSTANT):
            raise ConfigError(f"unsupported arm distribution {self.kind!r}")
        if not 0.0 <= self.mean <= 1.0:
            raise ConfigError(f"arm mean {self.mean} outside [0, 1]")


class BanditInstance:
    """A K-armed instance shared by V agents.

    Parameters
    ----------
    arms : sequence of ArmSpec, (kind, mean) pairs or plain floats
        Plain floats are read as Bernoulli means.
    num_agents : int
        Number of cooperating agents, at most the number of arms.
    """

    def __init__(self, arms, num_agents: int):
        specs = []
        for a in arms:
            if isinstance(a, ArmSpec):
                specs.append(a)
            elif isinstance(a, (tuple, list)):
                specs.append(ArmSpec(str(a[0]), float(a[1])))
            else:
                specs.append(ArmSpec(BERNOULLI, float(a)))
        if not specs:
            raise ConfigError("instance needs at least one arm")
        if int(num_agents) < 1:
            raise ConfigError("num_agents must be positive")
        if num_agents > len(specs):
            raise ConfigError(
                f"num_agents={num_agents} exceeds num_arms={len(specs)}")
        self.arms = tuple(specs)
        self.num_agents = int(num_agents)
        self.means = np.array([a.mean for a in specs], dtype=float)
        self.best_arm = int(np.argmax(self.means))
        self.gaps = self.means[self.best_arm] - self.means
        positive = self.gaps[self.gaps > 0]
        self.min_gap = float(positive.min()) if positive.size else 0.0

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @classmethod
    def bernoulli(cls, means: Sequence[float], num_agents: int):
        return cls([ArmSpec(BERNOULLI, float(m)) for m in means], num_agents)

    def __eq__(self, other):
        return (isinstance(other, BanditInstance)
                and self.arms == other.arms
                and self.num_agents == other.num_agents)

    def __repr__(self):
        arms = ", ".join(f"{a.kind}({a.mean:g})" for a in self.arms)
        return f"BanditInstance([{arms}], num_agents={self.num_agents})"


@dataclass
class RandomStreams:
    """Independent generators derived from one integer seed."""

    rewards: list  # rewards[v][i] is the generator of agent v, arm i
    algorithm: np.random.Generator
    adversary: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, num_agents: int, num_arms: int):
        root = np.random.SeedSequence(int(seed))
        reward_ss, algo_ss, adv_ss = root.spawn(3)
        children = reward_ss.spawn(num_agents * num_arms)
        rewards = [[np.random.default_rng(children[v * num_arms + i])
                    for i in range(num_arms)] for v in range(num_agents)]
        return cls(rewards, np.random.default_rng(algo_ss),
                   np.random.default_rng(adv_ss))


class RewardSource:
    """Buffered stochastic reward vectors r^S_v(t), one round after another.

    Each (agent, arm) stream is consumed in fixed-size chunks, so the values
    handed out never depend on how callers slice the horizon.
    """

    CHUNK = 4096

    def __init__(self, instance: BanditInstance, generators):
        self.instance = instance
        self.generators = generators
        self._buf = np.empty((0, instance.num_agents, instance.num_arms))
        self._pos = 0
        self.rounds_drawn = 0

    def _refill(self):
        inst = self.instance
        buf = np.empty((self.CHUNK, inst.num_agents, inst.num_arms))
        for i, arm in enumerate(inst.arms):
            if arm.kind == CONSTANT:
                buf[:, :, i] = arm.mean
                continue
            for v in range(inst.num_agents):
                u = self.generators[v][i].random(self.CHUNK)
                buf[:, v, i] = u < arm.mean
        self._buf = buf
        self._pos = 0

    def next(self, n: int = 1) -> np.ndarray:
        """Stochastic vectors for the next ``n`` rounds, shape (n, V, K)."""
        out = np.empty((n, self.instance.num_agents, self.instance.num_arms))
        filled = 0
        while filled < n:
            if self._pos >= len(self._buf):
                self._refill()
            take = min(n - filled, len(self._buf) - self._pos)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        self.rounds_drawn += n
        return out


def sample_stochastic_rewards(instance: BanditInstance, source: RewardSource):
    """One round of stochastic reward vectors, shape (V, K)."""
    return source.next(1)[0]


@dataclass
class RoundRecord:
    t: int
    choices: np.ndarray
    stochastic: Optional[np.ndarray]
    corrupted: Optional[np.ndarray]
    observed: np.ndarray
    inf_norm_corruption: np.ndarray


class RunLog:
    """Everything that happened in one simulated run.

    Arrays are indexed by ``t - 1``. In lean mode the full K-dimensional
    reward vectors are dropped and only played-arm quantities remain.
    """

    def __init__(self, instance, horizon, lean=False, share_vectors=False):
        V, K = instance.num_agents, instance.num_arms
        self.instance = instance
        self.horizon = int(horizon)
        self.lean = bool(lean)
        self.choices = np.zeros((horizon, V), dtype=np.int64)
        self.observed = np.zeros((horizon, V))
        self.observed_stochastic = np.zeros((horizon, V))
        self.inf_corruption = np.zeros((horizon, V))
        if lean:
            self.stochastic = self.corrupted = None
        else:
            self.stochastic = np.zeros((horizon, V, K))
            # identity adversaries never diverge, so one buffer serves both
            self.corrupted = (self.stochastic if share_vectors
                              else np.zeros((horizon, V, K)))
        self.rounds_completed = 0
        self.algo = ""
        self.adversary = ""
        self.seed = None
        self.snapshots: list = []
        self.comm_events: list = []      # (t, values, messages)
        self.segment_starts: list = []   # first round of each epoch/phase
        self.adversary_info: dict = {}

    def write(self, t0, choices, stochastic, corrupted, observed, inf_norm):
        n = len(choices)
        sl = slice(t0 - 1, t0 - 1 + n)
        V = self.instance.num_agents
        rows = np.arange(n)[:, None]
        agents = np.arange(V)[None, :]
        self.choices[sl] = choices
        self.observed[sl] = observed
        self.observed_stochastic[sl] = stochastic[rows, agents, choices]
        self.inf_corruption[sl] = inf_norm
        if not self.lean:
            self.stochastic[sl] = stochastic
            if self.corrupted is not self.stochastic:
                self.corrupted[sl] = corrupted
        self.rounds_completed = t0 - 1 + n

    def record(self, t: int) -> RoundRecord:
        if not 1 <= t <= self.rounds_completed:
            raise IndexError(f"round {t} not recorded")
        k = t - 1
        return RoundRecord(
            t=t,
            choices=self.choices[k].copy(),
            stochastic=None if self.lean else self.stochastic[k].copy(),
            corrupted=None if self.lean else self.corrupted[k].copy(),
            observed=self.observed[k].copy(),
            inf_norm_corruption=self.inf_corruption[k].copy(),
        )

    def records(self):
        for t in range(1, self.rounds_completed + 1):
            yield self.record(t)

    def segment_of(self, t):
        """Epoch (or phase) index, 1-based, containing round ``t``."""
        if not self.segment_starts:
            return 0
        return int(np.searchsorted(self.segment_starts, t, side="right"))


class History:
    """Read-only view of a run log up to the last completed round.

    This is what adversaries get to see: rounds 1..t-1 in full, never the
    choices of the round being corrupted.
    """

    def __init__(self, log: RunLog):
        self._log = log

    @property
    def t(self) -> int:
        """Number of completed rounds."""
        return self._log.rounds_completed

    def choices(self):
        return self._log.choices[:self.t]

    def observed(self):
        return self._log.observed[:self.t]

    def inf_corruption(self):
        return self._log.inf_corruption[:self.t]

    def stochastic(self):
        if self._log.lean:
            raise AttributeError("reward vectors are not retained in lean mode")
        return self._log.stochastic[:self.t]

    def corrupted(self):
        if self._log.lean:
            raise AttributeError("reward vectors are not retained in lean mode")
        return self._log.corrupted[:self.t]

    def last_choices(self):
        if self.t == 0:
            return None
        return self._log.choices[self.t - 1]

    def record(self, t):
        if t > self.t:
            raise IndexError(f"round {t} is not in the past")
        return self._log.record(t)


def apply_adversary(t, stochastic, adversary, history):
    """Corrupt one round and return ``(corrupted, inf_norm_per_agent)``."""
    corrupted = adversary.corrupt(t, stochastic, history)
    if corrupted is stochastic:
        return corrupted, np.zeros(len(stochastic))
    corrupted = np.asarray(corrupted, dtype=float)
    if corrupted.shape != stochastic.shape:
        raise AdversaryRangeViolation(
            f"adversary returned shape {corrupted.shape} at t={t}, "
            f"expected {stochastic.shape}")
    if np.any(corrupted < 0.0) or np.any(corrupted > 1.0) \
            or not np.all(np.isfinite(corrupted)):
        raise AdversaryRangeViolation(
            f"adversary {type(adversary).__name__} produced rewards outside "
            f"[0, 1] at t={t}")
    return corrupted, np.abs(corrupted - stochastic).max(axis=1)


def execute_round(t, choices, instance, adversary, source, history=None):
    """Run round ``t``: draw, corrupt, then reveal rewards at ``choices``.

    The adversary is called before the choices are looked at, so it cannot
    react to them.
    """
    choices = np.asarray(choices, dtype=np.int64)
    if choices.shape != (instance.num_agents,) or np.any(choices < 0) \
            or np.any(choices >= instance.num_arms):
        raise ConfigError(f"invalid arm choices {choices!r}")
    stochastic = sample_stochastic_rewards(instance, source)
    corrupted, inf_norm = apply_adversary(t, stochastic, adversary, history)
    observed = corrupted[np.arange(instance.num_agents), choices]
    return RoundRecord(t, choices.copy(), stochastic, corrupted,
                       observed, inf_norm)


def simulate(policy, instance, adversary, horizon, seed, lean=False,
             max_chunk=65536):
    """Run ``policy`` against ``adversary`` (None means no corruption) for
    ``horizon`` rounds.

    The policy commits to a block of choices that cannot depend on feedback
    inside the block (one round for UCB-style policies, a whole epoch for
    epoch-based ones). Feedback is delivered chunk by chunk, in round order.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ConfigError("horizon must be positive")
    if adversary is None:
        from .adversaries import NullAdversary
        adversary = NullAdversary()
    V, K = instance.num_agents, instance.num_arms
    streams = RandomStreams.from_seed(seed, V, K)
    source = RewardSource(instance, streams.rewards)
    policy.reset(instance, horizon, streams.algorithm)
    adversary.reset(instance, horizon, streams.adversary)
    log = RunLog(instance, horizon, lean=lean,
                 share_vectors=getattr(adversary, "identity", False))
    log.algo = policy.name
    log.adversary = adversary.name
    log.seed = seed
    history = History(log)
    agents = np.arange(V)

    t = 1
    while t <= horizon:
        plan = np.asarray(policy.plan(t, horizon - t + 1), dtype=np.int64)
        if plan.ndim != 2 or plan.shape[1] != V or len(plan) == 0 \
                or len(plan) > horizon - t + 1:
            raise ConfigError(f"policy {policy.name} returned a bad plan "
                              f"of shape {plan.shape} at t={t}")
        for start in range(0, len(plan), max_chunk):
            ch = plan[start:start + max_chunk]
            t0 = t + start
            n = len(ch)
            stoch = source.next(n)
            rows = np.arange(n)[:, None]
            if adversary.idle:
                observed = stoch[rows, agents[None, :], ch]
                log.write(t0, ch, stoch, stoch, observed, np.zeros((n, V)))
            else:
                observed = np.empty((n, V))
                for j in range(n):
                    s = stoch[j]
                    r, inf = apply_adversary(t0 + j, s, adversary, history)
                    observed[j] = r[agents, ch[j]]
                    log.write(t0 + j, ch[j:j + 1], s[None], r[None],
                              observed[j:j + 1], inf[None])
            policy.feedback(t0, ch, observed)
        t += len(plan)

    policy.finalize(log)
    log.adversary_info = adversary.summary()
    return log
