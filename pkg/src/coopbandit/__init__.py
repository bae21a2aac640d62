"""Cooperative multi-agent stochastic bandits with adversarial corruptions."""

from .adversaries import (Adversary, FlipMeanAdversary, FlipMeanConfig,
                          NullAdversary, TargetedGapAdversary,
                          lower_bound_instance, make_adversary)
from .baselines import UCB1, CoopAAE, make_policy
from .cbarc import CBARC, run_cbarc
from .env import ArmSpec, BanditInstance, RunLog, execute_round, simulate
from .errors import (AdversaryRangeViolation, ConfigError, InvariantViolation,
                     ShapeMismatch)
from .metrics import (aggregate_over_seeds, comm_cost, compute_series,
                      corruption_totals, pseudo_regret, realized_regret)

__version__ = "0.1.0"
