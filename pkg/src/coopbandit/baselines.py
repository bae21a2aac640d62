"""Non-robust reference policies: independent UCB1 and cooperative
active arm elimination (AAE) with pooled statistics."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, InvariantViolation


class UCB1:
    """Each agent runs UCB1 on its own observations; no communication."""

    name = "ucb1"

    def reset(self, instance, horizon, rng):
        V, K = instance.num_agents, instance.num_arms
        self.K = K
        self.counts = np.zeros((V, K), dtype=np.int64)
        self.sums = np.zeros((V, K))
        self.t = 0

    def choose(self, t):
        """Arm per agent for round ``t`` (1-based)."""
        unpulled = self.counts == 0
        out = np.empty(len(self.counts), dtype=np.int64)
        with np.errstate(divide="ignore", invalid="ignore"):
            index = self.sums / self.counts + np.sqrt(
                2.0 * math.log(t) / self.counts)
        for v in range(len(out)):
            if unpulled[v].any():
                out[v] = int(np.argmax(unpulled[v]))
            else:
                out[v] = int(np.argmax(index[v]))
        return out

    def plan(self, t, remaining):
        return self.choose(t)[None, :]

    def feedback(self, t0, choices, observed):
        V = choices.shape[1]
        agents = np.arange(V)
        for row, obs in zip(choices, observed):
            self.counts[agents, row] += 1
            self.sums[agents, row] += obs
            self.t += 1

    def finalize(self, log):
        log.comm_events = []
        log.segment_starts = []


def ucb1_step(counts, sums, t):
    """Single-agent UCB1 choice from count and sum arrays."""
    counts = np.asarray(counts)
    sums = np.asarray(sums, dtype=float)
    if np.any(counts == 0):
        return int(np.argmax(counts == 0))
    return int(np.argmax(sums / counts + np.sqrt(2.0 * math.log(t) / counts)))


def confidence_radius(pooled_count, num_arms, phase, delta):
    return np.sqrt(math.log(num_arms * phase ** 2 / delta)
                   / (2.0 * np.asarray(pooled_count, dtype=float)))


class CoopAAE:
    """Cooperative successive elimination with phase doubling.

    In phase ``l`` the agents cycle through the surviving arms in round-robin
    order until every survivor has been pulled ``initial_pulls * 2^(l-1)``
    more times in total (pooled over agents).
    At the end of a phase an arm is eliminated for good when its pooled upper
    confidence bound falls below the best pooled lower confidence bound.
    """

    name = "coop_aae"

    def __init__(self, delta=0.05, initial_pulls=10):
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta={delta} must lie in (0, 1)", key="delta")
        if int(initial_pulls) < 1:
            raise ConfigError("initial_pulls must be positive")
        self.delta = float(delta)
        self.initial_pulls = int(initial_pulls)

    def reset(self, instance, horizon, rng):
        K = instance.num_arms
        self.K = K
        self.V = instance.num_agents
        self.survivors = np.arange(K)
        self.counts = np.zeros(K, dtype=np.int64)
        self.sums = np.zeros(K)
        self.phase = 0
        self.eliminated = []     # (phase, arm, round)
        self.comm_events = []
        self.segment_starts = []
        self.history = []        # survivors at the start of each phase

    def plan(self, t, remaining):
        self.phase += 1
        S = self.survivors
        pulls = len(S) * self.initial_pulls * 2 ** (self.phase - 1)
        n_full = -(-pulls // self.V)
        n = min(n_full, remaining)
        self._truncated = n < n_full
        self._remaining = n
        self._end = t + n - 1
        slots = np.arange(n)[:, None] * self.V + np.arange(self.V)[None, :]
        self.segment_starts.append(t)
        self.history.append(S.copy())
        return S[slots % len(S)]

    def feedback(self, t0, choices, observed):
        self.counts += np.bincount(choices.ravel(), minlength=self.K)
        self.sums += np.bincount(choices.ravel(), weights=observed.ravel(),
                                 minlength=self.K)
        self._remaining -= len(choices)
        if self._remaining == 0 and not self._truncated:
            self._eliminate()

    def _eliminate(self):
        S = self.survivors
        mean = self.sums[S] / self.counts[S]
        rad = confidence_radius(self.counts[S], self.K, self.phase, self.delta)
        keep = mean + rad >= np.max(mean - rad)
        if not keep.any():
            raise InvariantViolation("coop_aae eliminated every arm")
        for arm in S[~keep]:
            self.eliminated.append((self.phase, int(arm), self._end))
        if self.V > 1:
            # each agent reports sums for the survivors, leader broadcasts set
            values = self.V * (2 * len(S) + int(keep.sum()))
            self.comm_events.append((self._end, values, 2 * self.V))
        self.survivors = S[keep]

    def finalize(self, log):
        log.comm_events = self.comm_events
        log.segment_starts = self.segment_starts
        log.snapshots = [{"phase": p + 1, "survivors": s.tolist()}
                         for p, s in enumerate(self.history)]


def make_policy(algo: str, delta: float = 0.05, **kwargs):
    if algo == "cbarc":
        from .cbarc import CBARC
        return CBARC(delta, **kwargs)
    if algo == "ucb1":
        return UCB1()
    if algo == "coop_aae":
        return CoopAAE(delta, **kwargs)
    raise ConfigError(f"unknown algorithm {algo!r}", key="algo")
