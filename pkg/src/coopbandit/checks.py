"""Structural invariant checks over cbarc epoch snapshots.

Each check returns a list of human-readable violations; empty means pass.
"""

from __future__ import annotations

import numpy as np

from .cbarc import (PROB_TOL, EpochSnapshot, LeaderState, epoch_length,
                    error_level)


def check_probabilities(snap: EpochSnapshot):
    out = []
    for view in snap.views:
        total = view.probs.sum()
        if abs(total - 1.0) > PROB_TOL:
            out.append(f"tau={snap.tau} agent={view.agent}: sum p = {total!r}")
        bad = snap.bad[view.arms]
        mass = view.probs[bad].sum()
        if mass > 0.25 + PROB_TOL:
            out.append(f"tau={snap.tau} agent={view.agent}: bad-arm mass "
                       f"{mass!r} > 1/4")
        if np.any(view.probs < 0):
            out.append(f"tau={snap.tau} agent={view.agent}: negative p")
        if len(view.active) == 0:
            out.append(f"tau={snap.tau} agent={view.agent}: no active arm")
    return out


def check_sets(snap: EpochSnapshot, num_arms: int):
    out = []
    A, B = snap.active, snap.bad
    if np.any(A & B) or not np.all(A | B):
        out.append(f"tau={snap.tau}: A and B do not partition the arms")
    held = np.zeros(num_arms, dtype=bool)
    union_a = np.zeros(num_arms, dtype=bool)
    union_b = np.zeros(num_arms, dtype=bool)
    for view in snap.views:
        held[view.arms] = True
        union_a[view.active] = True
        union_b[view.bad] = True
        if len(view.arms) > snap.k_tilde:
            out.append(f"tau={snap.tau} agent={view.agent}: "
                       f"|K_v|={len(view.arms)} > {snap.k_tilde}")
        if snap.best_arm_in not in view.arms:
            out.append(f"tau={snap.tau} agent={view.agent}: empirical best "
                       "arm missing from arm set")
    if not held.all():
        out.append(f"tau={snap.tau}: arm sets do not cover all arms")
    if not np.array_equal(union_a, A) or not np.array_equal(union_b, B):
        out.append(f"tau={snap.tau}: agent sets do not union to A / B")
    if snap.reactivated is not None:
        if np.any(snap.reactivated & ~B):
            out.append(f"tau={snap.tau}: H not inside B")
        if np.any(snap.deactivated & ~(A | snap.reactivated)):
            out.append(f"tau={snap.tau}: M not inside A u H")
    return out


def check_error_ladder(snap: EpochSnapshot):
    out = []
    tau = snap.tau
    if snap.eps != error_level(tau):
        out.append(f"tau={tau}: eps={snap.eps!r} != {error_level(tau)!r}")
    if np.any(snap.eps_arms < snap.eps):
        out.append(f"tau={tau}: some eps_i below eps")
    ladder = error_level(np.asarray(snap.d))
    bad = snap.bad
    if np.any(snap.eps_arms[bad] != ladder[bad]):
        out.append(f"tau={tau}: bad arm with eps_i != eps(d_i)")
    if np.any(snap.eps_arms > 7.0 * ladder):
        out.append(f"tau={tau}: eps_i above 7 eps(d_i)")
    if tau >= 2:
        act = snap.active
        if np.any(snap.d[act] != tau - 1):
            out.append(f"tau={tau}: active arm with d_i != tau - 1")
        if np.any(ladder[act] / 2.0 != snap.eps):
            out.append(f"tau={tau}: active arm with eps != eps(d_i)/2")
    if np.any(snap.d > max(tau - 1, 1)) or np.any(snap.d < 1):
        out.append(f"tau={tau}: d_i out of range")
    allowed = error_level(np.arange(1, tau + 1))
    if not np.all(np.isin(snap.eps_arms, allowed)):
        out.append(f"tau={tau}: eps_i off the ladder")
    return out


def check_transitions(snapshots):
    out = []
    for prev, nxt in zip(snapshots, snapshots[1:]):
        if prev.best_arm is None:
            continue
        if not nxt.active[prev.best_arm]:
            out.append(f"tau={prev.tau}: empirical best arm {prev.best_arm} "
                       "not active in the next epoch")
        if nxt.best_arm_in != prev.best_arm:
            out.append(f"tau={nxt.tau}: allocation used a stale best arm")
        exp_a = (prev.active | prev.reactivated) & ~prev.deactivated
        if not np.array_equal(exp_a, nxt.active):
            out.append(f"tau={nxt.tau}: A does not follow (A u H) \\ M")
    return out


def check_snapshots(snapshots, num_arms: int):
    """Run every structural check on a list of epoch snapshots."""
    out = []
    for snap in snapshots:
        out += check_probabilities(snap)
        out += check_sets(snap, num_arms)
        out += check_error_ladder(snap)
    out += check_transitions(snapshots)
    return out


def check_log(log):
    """Invariant checks for any run log; non-cbarc logs only get the
    corruption-accounting check."""
    out = []
    if log.snapshots and isinstance(log.snapshots[0], EpochSnapshot):
        out += check_snapshots(log.snapshots, log.instance.num_arms)
    if not log.lean:
        diff = np.abs(log.corrupted - log.stochastic).max(axis=2)
        if not np.array_equal(diff, log.inf_corruption):
            out.append("per-round corruption does not match reward vectors")
    if np.any(log.inf_corruption < 0) or np.any(log.inf_corruption > 1):
        out.append("per-round corruption outside [0, 1]")
    return out


def synthetic_trajectory(num_arms, num_agents, rng, epochs=5, means=None,
                         noise=0.3, horizon=4 ** 10, delta=0.05):
    """Drive the leader through ``epochs`` epochs with random estimate tables.

    No rounds are simulated; estimates are true means plus uniform noise of
    width ``noise``, which exercises deactivation and reactivation far more
    often than a real run would. Returns the epoch snapshots.
    """
    K, V = num_arms, num_agents
    if means is None:
        means = rng.random(K)
    leader = LeaderState.initial(K, V, rng)
    snaps = []
    for _ in range(epochs):
        alloc, views = leader.begin_epoch(rng)
        N = epoch_length(leader.eps, alloc.k_tilde, K, horizon, delta)
        snap = EpochSnapshot(
            tau=leader.tau, start=0, end=0, length=N, truncated=False,
            eps=leader.eps, eps_arms=leader.eps_arms.copy(),
            d=leader.d.copy(), active=leader.active.copy(),
            bad=leader.bad.copy(), best_arm_in=leader.best_arm,
            k_tilde=alloc.k_tilde, views=views)
        mu_hat = means + rng.uniform(-noise, noise, K)
        H, M, best, value, kept = leader.end_epoch(mu_hat)
        snap.reactivated, snap.deactivated = H, M
        snap.best_arm, snap.best_value, snap.best_retained = best, value, kept
        snap.mu_hat = mu_hat
        snaps.append(snap)
    return snaps
