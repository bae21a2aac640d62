"""Communication grows with the number of epochs, not the horizon.

Each epoch costs V (5 K~ + 1) values and 3V messages (report, best arm,
update). Epoch lengths quadruple, so the count of epochs, and with it the
total communication, grows like log T. UCB1 never communicates; AAE talks
once per phase.

    python demos/04_communication.py
"""

import math

from coopbandit import BanditInstance, CBARC, CoopAAE, simulate
from coopbandit.metrics import comm_cost

inst = BanditInstance.bernoulli([0.95, 0.5, 0.3, 0.2, 0.1, 0.05], 3)

# %%
print(f"{'T':>9} {'epochs':>6} {'values':>7} {'msgs':>5} "
      f"{'bound':>7} {'aae values':>10}")
k_tilde = -(-inst.num_arms // inst.num_agents) + 1
for T in (10 ** 4, 10 ** 5, 10 ** 6, 4 * 10 ** 6):
    log = simulate(CBARC(), inst, None, T, seed=0, lean=True)
    vals, msgs = comm_cost(log)
    bound = inst.num_agents * (5 * k_tilde + 1) * (math.log(T, 4) + 2)
    aae = simulate(CoopAAE(), inst, None, T, seed=0, lean=True)
    print(f"{T:>9} {len(log.snapshots):>6} {vals:>7} {msgs:>5} "
          f"{bound:>7.0f} {comm_cost(aae)[0]:>10}")
