"""A small corruption budget breaks elimination, but not cbarc.

The targeted adversary pushes the best arm's reward down by 0.4 on every
agent until it has spent its budget C. Cooperative AAE eliminates arms for
good, so if a phase boundary falls inside the attack the best arm is gone
and regret grows linearly. cbarc keeps sampling deactivated arms and can
bring them back.

At this horizon cbarc's exploration cost is larger than AAE's regret in the
seeds where AAE survives the attack; what to look at is that cbarc's regret
barely moves with the attack while AAE's jumps by a factor of about 25 when
it loses the best arm.

    python demos/02_targeted_attack.py
"""

from coopbandit import (CBARC, BanditInstance, CoopAAE, TargetedGapAdversary,
                        simulate)
from coopbandit.metrics import corruption_level, pseudo_regret

inst = BanditInstance.bernoulli([0.9, 0.7, 0.7, 0.7], 2)
T = 100_000
budget = 1000.0

# %%
print(f"{'seed':>4} {'C':>7} {'aae R_T':>9} {'cbarc R_T':>10}  aae dropped best?")
for seed in range(6):
    aae = CoopAAE()
    row = []
    for policy in (aae, CBARC()):
        adv = TargetedGapAdversary(budget, depress=0.4)
        log = simulate(policy, inst, adv, T, seed, lean=True)
        row.append((pseudo_regret(log, inst, [T])[0],
                    corruption_level(log, [T])[0]))
    dropped = any(a == inst.best_arm for _, a, _ in aae.eliminated)
    print(f"{seed:>4} {row[0][1]:7.1f} {row[0][0]:9.0f} {row[1][0]:10.0f}  "
          f"{dropped}")

# %% Once AAE has eliminated arm 0 it never pulls it again.
aae = CoopAAE()
log = simulate(aae, inst, TargetedGapAdversary(budget), T, 5, lean=True)
last = [r for _, a, r in aae.eliminated if a == 0]
if last:
    print("arm 0 eliminated at round", last[0],
          "- pulls afterwards:", int((log.choices[last[0]:] == 0).sum()))
