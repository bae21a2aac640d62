"""The two-armed flip adversary.

Arm 0 is Bernoulli(1/2 - gap), arm 1 always pays 1/2. Inside the chosen
interval the adversary turns arm-0 zeros into ones with probability q, which
makes arm 0 look like Bernoulli(1/2 + gap): the apparent best arm is the
wrong one. It stops once arm 0 has been pulled more than 4Y times in that
interval, so the total corruption stays small.

    python demos/03_lower_bound_adversary.py
"""

import numpy as np

from coopbandit import CBARC, FlipMeanAdversary, FlipMeanConfig, simulate
from coopbandit.adversaries import interval_bounds, lower_bound_instance
from coopbandit.metrics import corruption_level, realized_regret

gap, T, V = 0.3, 100_000, 2
cfg = FlipMeanConfig(delta=gap, alpha=0.5, b0=1.0, start_interval=1)
print(f"flip probability q = {cfg.flip_probability:.3f}, "
      f"Y = {cfg.y:.2f}, stop after {cfg.pull_threshold:.1f} arm-0 pulls")
print("interval ends:", interval_bounds(T, cfg.alpha).tolist()[:5], "...")

# %% Corruption actually spent versus its expectation 2 gap per agent-round.
inst = lower_bound_instance(gap, V)
Cs, expected, regrets = [], [], []
for seed in range(20):
    adv = FlipMeanAdversary(cfg)
    log = simulate(CBARC(), inst, adv, T, seed)
    Cs.append(corruption_level(log, [T])[0])
    expected.append(2 * gap * V * adv.corrupted_rounds)
    regrets.append(realized_regret(log, [T])[0])

print(f"mean C = {np.mean(Cs):.1f}, expected {np.mean(expected):.1f}")
print(f"realized regret R'_T: median {np.median(regrets):.0f}, "
      f"min {np.min(regrets):.0f}")
