"""Step through the leader's end-of-epoch update by hand.

No rewards are simulated: we feed the leader estimate tables directly and
watch the active set, the per-arm error levels and the empirical best arm.
The second part shows the case where an arm that looked bad for several
epochs suddenly becomes the empirical best. Its bonus 2 eps_i is based on
an old, large error level, so it would fail its own deactivation test; by
default the leader keeps it active and flags the epoch.

    python demos/05_leader_trace.py
"""

import numpy as np

from coopbandit.cbarc import LeaderState
from coopbandit.errors import InvariantViolation

rng = np.random.default_rng(0)


def show(leader, H, M, best, kept):
    print(f"  tau -> {leader.tau}: H={np.flatnonzero(H).tolist()} "
          f"M={np.flatnonzero(M).tolist()} best={best} retained={kept}")
    print(f"     active={np.flatnonzero(leader.active).tolist()} "
          f"eps_i={np.round(leader.eps_arms, 4).tolist()} d={leader.d.tolist()}")


# %% Ordinary progress: a clear loser drops out once 14 eps is below its gap.
leader = LeaderState.initial(4, 2, rng)
for _ in range(4):
    leader.begin_epoch(rng)
    H, M, best, _, kept = leader.end_epoch([0.9, 0.85, 0.7, 0.05])
    show(leader, H, M, best, kept)

# %% An arm that recovers after looking dead.
for retain in (False, True):
    leader = LeaderState.initial(3, 1, rng, retain_best=retain)
    for _ in range(3):
        leader.begin_epoch(rng)
        leader.end_epoch([0.0, 0.5, 0.4])
    leader.begin_epoch(rng)
    print(f"retain_best={retain}")
    try:
        H, M, best, value, kept = leader.end_epoch([0.9, 0.5, 0.4])
        show(leader, H, M, best, kept)
    except InvariantViolation as e:
        print("  InvariantViolation:", e)
