"""Non-preemptive stochastic scheduling of jobs with decaying completion rewards."""

from .model import (
    Done, InService, Instance, Job, Matching, RewardFn, ServiceDist, State,
    ValidationError, Waiting, WAITING, canonical_matching, eval_reward,
    expected_completion_reward, feasible_matchings, greedy_index, residual_dist,
)
from .dp import (
    InfeasibleActionError, PolicyTable, StateSpaceError, evaluate_policy_exact,
    solve_optimal, state_key, transition_distribution,
)

__version__ = "0.1.0"
