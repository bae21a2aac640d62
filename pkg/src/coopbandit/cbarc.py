"""Cooperative epoch-based algorithm robust to adversarial corruptions.

Arms are never eliminated. Each epoch the leader splits them into an active
set, sampled uniformly, and a bad set, sampled with a probability that
shrinks with the arm's error level. Bad arms whose fresh estimates look
competitive are reconsidered (reactivation) before the deactivation test.

Arms are 0-based here; agent 0 is the leader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, InvariantViolation

EPS1 = 1.0 / 14.0
PROB_TOL = 1e-9


def error_level(epoch):
    """Global error level of epoch ``epoch`` (1-based): (1/14) 2^-(epoch-1).

    Works elementwise on integer arrays. Division by a power of two keeps
    the ladder exact in floating point.
    """
    epoch = np.asarray(epoch)
    out = EPS1 / np.power(2.0, epoch - 1)
    return float(out) if out.ndim == 0 else out


@dataclass
class Allocation:
    k_tilde: int
    arm_sets: List[np.ndarray]   # sorted arm ids per agent


def allocate_arms(num_arms, num_agents, best_arm, rng) -> Allocation:
    """Split the arms among agents and add the empirical best arm to each.

    Contiguous blocks of ceil(K/V) arms go to the first agents; the agent
    holding the tail pads its block with arms sampled from outside it, and
    any remaining agents sample a full block. With a single agent it holds
    every arm and ``k_tilde = K``.
    """
    K, V = int(num_arms), int(num_agents)
    if V > K:
        raise ConfigError(f"num_agents={V} exceeds num_arms={K}")
    if not 0 <= best_arm < K:
        raise ConfigError(f"best arm {best_arm} out of range")
    if V == 1:
        return Allocation(K, [np.arange(K)])
    m = -(-K // V)
    v_bar = -(-K // m)   # minimal v with v*m >= K
    sets = []
    for v in range(1, V + 1):
        if v < v_bar:
            block = np.arange((v - 1) * m, v * m)
        elif v == v_bar:
            block = np.arange((v - 1) * m, K)
            outside = np.setdiff1d(np.arange(K), block)
            pad = v_bar * m - K
            if pad:
                block = np.concatenate(
                    [block, rng.choice(outside, size=pad, replace=False)])
        else:
            block = rng.choice(K, size=m, replace=False)
        sets.append(np.union1d(block, [best_arm]))
    return Allocation(m + 1, sets)


def pull_probabilities(arms, active_mask, eps, eps_arms, k_tilde):
    """Sampling distribution of one agent over its arm set.

    Parameters
    ----------
    arms : array of int
        The agent's arm set, ascending.
    active_mask : bool array over all arms
    eps : float
        Global error level of the epoch.
    eps_arms : float array over all arms
        Per-arm error levels.
    k_tilde : int
        Nominal arm-set size used in the bad-arm denominator.
    """
    arms = np.asarray(arms)
    is_active = np.asarray(active_mask)[arms]
    if not is_active.any():
        raise InvariantViolation(f"agent arm set {arms.tolist()} has no "
                                 "active arm")
    p = np.empty(len(arms))
    bad = ~is_active
    p[bad] = eps ** 2 / (np.asarray(eps_arms)[arms[bad]] ** 2 * k_tilde)
    p[is_active] = (1.0 - p[bad].sum()) / is_active.sum()
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InvariantViolation(f"invalid pull distribution {p.tolist()}")
    return p


def epoch_length_raw(eps, k_tilde, num_arms, horizon, delta):
    """3 k_tilde ln(8 K log_4 T / delta) / eps^2 before rounding."""
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta={delta} must lie in (0, 1)", key="delta")
    if horizon < 4:
        raise ConfigError("horizon must be at least 4", key="horizon")
    log4t = math.log(horizon) / math.log(4.0)
    return 3.0 * k_tilde * math.log(8.0 * num_arms * log4t / delta) / eps ** 2


def epoch_length(eps, k_tilde, num_arms, horizon, delta) -> int:
    return int(math.ceil(epoch_length_raw(eps, k_tilde, num_arms,
                                          horizon, delta)))


def agent_estimate(reward_sum, expected_count):
    """Importance-weighted mean: observed reward total over the *expected*
    pull count. Not clipped; may exceed 1."""
    expected_count = np.asarray(expected_count, dtype=float)
    if np.any(expected_count <= 0):
        raise InvariantViolation("expected pull count must be positive")
    out = np.asarray(reward_sum, dtype=float) / expected_count
    return float(out) if out.ndim == 0 else out


def leader_aggregate(arm_sets, local_estimates, num_arms):
    """Average each arm's local estimates over the agents holding it."""
    total = np.zeros(num_arms)
    holders = np.zeros(num_arms, dtype=np.int64)
    for arms, est in zip(arm_sets, local_estimates):
        total[arms] += est
        holders[arms] += 1
    if np.any(holders == 0):
        missing = np.flatnonzero(holders == 0).tolist()
        raise InvariantViolation(f"arms {missing} are held by no agent")
    return total / holders


def reactivate(active, bad, mu_hat, d):
    """Bad arms whose estimate is within 4 eps(d_i) of the best active one."""
    active = np.asarray(active, dtype=bool)
    bad = np.asarray(bad, dtype=bool)
    if not bad.any():
        return np.zeros_like(bad)
    top = np.max(np.asarray(mu_hat)[active])
    return bad & (top - np.asarray(mu_hat) < 4.0 * error_level(np.asarray(d)))


def select_empirical_best(candidates, mu_hat, eps_arms):
    """argmax of mu_hat + 2 eps_j over the candidates, lowest index on ties."""
    candidates = np.asarray(candidates, dtype=bool)
    if not candidates.any():
        raise InvariantViolation("no candidate arms for the empirical best")
    score = np.where(candidates,
                     np.asarray(mu_hat) + 2.0 * np.asarray(eps_arms), -np.inf)
    best = int(np.argmax(score))
    return best, float(score[best])


def deactivate(active, bad, reactivated, best_arm, best_value, mu_hat, eps,
               retain_best=False):
    """Deactivation step; returns ``(M, next_active, next_bad, retained)``.

    ``M`` holds candidates whose estimate trails ``best_value`` by more than
    14 eps. If the empirical best arm itself lands in ``M`` this raises
    InvariantViolation, unless ``retain_best`` is set, in which case it is
    kept active and ``retained`` is True.
    """
    active = np.asarray(active, dtype=bool)
    bad = np.asarray(bad, dtype=bool)
    reactivated = np.asarray(reactivated, dtype=bool)
    pool = active | reactivated
    dropped = pool & (best_value - np.asarray(mu_hat) > 14.0 * eps)
    retained = False
    if dropped[best_arm]:
        if not retain_best:
            raise InvariantViolation(
                f"empirical best arm {best_arm} failed its own deactivation "
                f"test (gap {best_value - mu_hat[best_arm]:.6g} > "
                f"{14.0 * eps:.6g})")
        dropped[best_arm] = False
        retained = True
    next_active = pool & ~dropped
    next_bad = (bad & ~reactivated) | dropped
    return dropped, next_active, next_bad, retained


def update_error_levels(next_active, tau, d, eps):
    """Error levels for epoch tau + 1; returns ``(eps_next, eps_arms, d)``."""
    next_active = np.asarray(next_active, dtype=bool)
    d = np.where(next_active, tau, np.asarray(d)).astype(np.int64)
    eps_next = eps / 2.0
    eps_arms = np.where(next_active, eps_next, error_level(d))
    return eps_next, eps_arms, d


@dataclass
class AgentView:
    agent: int
    arms: np.ndarray
    active: np.ndarray      # subset of arms
    bad: np.ndarray
    probs: np.ndarray       # aligned with arms

    def expected_counts(self, n):
        return self.probs * n


@dataclass
class EpochSnapshot:
    """State at the start of an epoch plus the leader's end-of-epoch step.

    Fields after ``truncated`` stay ``None`` when the epoch was cut by the
    horizon and no update happened.
    """

    tau: int
    start: int
    end: int
    length: int              # nominal N(tau)
    truncated: bool
    eps: float
    eps_arms: np.ndarray
    d: np.ndarray
    active: np.ndarray
    bad: np.ndarray
    best_arm_in: int
    k_tilde: int
    views: List[AgentView]
    reactivated: Optional[np.ndarray] = None
    deactivated: Optional[np.ndarray] = None
    best_arm: Optional[int] = None
    best_value: Optional[float] = None
    best_retained: bool = False
    mu_hat: Optional[np.ndarray] = None
    local_estimates: Optional[List[np.ndarray]] = None
    comm_values: int = 0
    comm_messages: int = 0


def report_values(k_tilde):
    """Values per agent and epoch: report (3 k), best arm (1), update (2 k)."""
    return 3 * k_tilde, 1, 2 * k_tilde


@dataclass
class LeaderState:
    """Global state kept by the leader between epochs."""

    num_arms: int
    num_agents: int
    tau: int = 1
    eps: float = EPS1
    eps_arms: np.ndarray = None
    d: np.ndarray = None
    active: np.ndarray = None
    bad: np.ndarray = None
    best_arm: int = 0
    retain_best: bool = True
    history: list = field(default_factory=list)

    @classmethod
    def initial(cls, num_arms, num_agents, rng, retain_best=True):
        K = num_arms
        return cls(num_arms=K, num_agents=num_agents,
                   eps_arms=np.full(K, EPS1), d=np.ones(K, dtype=np.int64),
                   active=np.ones(K, dtype=bool), bad=np.zeros(K, dtype=bool),
                   best_arm=int(rng.integers(K)), retain_best=retain_best)

    def begin_epoch(self, rng):
        alloc = allocate_arms(self.num_arms, self.num_agents, self.best_arm,
                              rng)
        views = []
        for v, arms in enumerate(alloc.arm_sets):
            p = pull_probabilities(arms, self.active, self.eps,
                                   self.eps_arms, alloc.k_tilde)
            views.append(AgentView(v, arms, arms[self.active[arms]],
                                   arms[self.bad[arms]], p))
        return alloc, views

    def end_epoch(self, mu_hat):
        """Reactivation, deactivation and error-level update."""
        mu_hat = np.asarray(mu_hat, dtype=float)
        H = reactivate(self.active, self.bad, mu_hat, self.d)
        best, best_value = select_empirical_best(self.active | H, mu_hat,
                                                 self.eps_arms)
        M, nxt_a, nxt_b, retained = deactivate(
            self.active, self.bad, H, best, best_value, mu_hat, self.eps,
            retain_best=self.retain_best)
        eps_next, eps_arms, d = update_error_levels(nxt_a, self.tau, self.d,
                                                    self.eps)
        self.active, self.bad = nxt_a, nxt_b
        self.eps, self.eps_arms, self.d = eps_next, eps_arms, d
        self.best_arm = best
        self.tau += 1
        return H, M, best, best_value, retained


class CBARC:
    """Policy driver for the simulator.

    Parameters
    ----------
    delta : float
        Confidence parameter in (0, 1).
    retain_best : bool
        Keep the empirical best arm active when it fails its own
        deactivation test instead of raising InvariantViolation.
    """

    name = "cbarc"

    def __init__(self, delta=0.05, retain_best=True):
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta={delta} must lie in (0, 1)", key="delta")
        self.delta = float(delta)
        self.retain_best = retain_best

    def reset(self, instance, horizon, rng):
        if horizon < 4:
            raise ConfigError("horizon must be at least 4", key="horizon")
        self.instance = instance
        self.horizon = int(horizon)
        self.rng = rng
        K, V = instance.num_arms, instance.num_agents
        self.leader = LeaderState.initial(K, V, rng, self.retain_best)
        self.snapshots: List[EpochSnapshot] = []
        self.comm_events = []
        self.segment_starts = []
        if V > 1:
            # warm-up: best-arm and allocation broadcast for epoch 1
            k_tilde = -(-K // V) + 1
            _, best_v, update_v = report_values(k_tilde)
            self.comm_events.append((0, V * (best_v + update_v), 2 * V))
        self._current = None

    def plan(self, t, remaining):
        L = self.leader
        alloc, views = L.begin_epoch(self.rng)
        N = epoch_length(L.eps, alloc.k_tilde, self.instance.num_arms,
                         self.horizon, self.delta)
        n = min(N, remaining)
        snap = EpochSnapshot(
            tau=L.tau, start=t, end=t + n - 1, length=N, truncated=n < N,
            eps=L.eps, eps_arms=L.eps_arms.copy(), d=L.d.copy(),
            active=L.active.copy(), bad=L.bad.copy(), best_arm_in=L.best_arm,
            k_tilde=alloc.k_tilde, views=views)
        self.snapshots.append(snap)
        self.segment_starts.append(t)
        V = self.instance.num_agents
        u = self.rng.random((n, V))
        choices = np.empty((n, V), dtype=np.int64)
        for v, view in enumerate(views):
            cdf = np.cumsum(view.probs)
            idx = np.searchsorted(cdf, u[:, v], side="right")
            choices[:, v] = view.arms[np.minimum(idx, len(view.arms) - 1)]
        self._current = snap
        self._sums = np.zeros((V, self.instance.num_arms))
        self._received = 0
        return choices

    def feedback(self, t0, choices, observed):
        K = self.instance.num_arms
        for v in range(choices.shape[1]):
            self._sums[v] += np.bincount(choices[:, v], weights=observed[:, v],
                                         minlength=K)
        self._received += len(choices)
        snap = self._current
        if self._received == snap.end - snap.start + 1 and not snap.truncated:
            self._end_epoch(snap)

    def _end_epoch(self, snap):
        K, V = self.instance.num_arms, self.instance.num_agents
        local = [agent_estimate(self._sums[v][view.arms],
                                view.expected_counts(snap.length))
                 for v, view in enumerate(snap.views)]
        mu_hat = leader_aggregate([vw.arms for vw in snap.views], local, K)
        H, M, best, best_value, retained = self.leader.end_epoch(mu_hat)
        snap.reactivated, snap.deactivated = H, M
        snap.best_arm, snap.best_value = best, best_value
        snap.best_retained = retained
        snap.mu_hat, snap.local_estimates = mu_hat, local
        if V > 1:
            report, best_v, update_v = report_values(snap.k_tilde)
            snap.comm_values = V * (report + best_v + update_v)
            snap.comm_messages = 3 * V
            self.comm_events.append((snap.end, snap.comm_values,
                                     snap.comm_messages))

    def finalize(self, log):
        log.snapshots = self.snapshots
        log.comm_events = self.comm_events
        log.segment_starts = self.segment_starts


def run_cbarc(instance, adversary, horizon, delta=0.05, seed=0, lean=False,
              retain_best=True):
    """Simulate the algorithm once and return the RunLog."""
    from .env import simulate
    return simulate(CBARC(delta, retain_best=retain_best), instance,
                    adversary, horizon, seed, lean=lean)
