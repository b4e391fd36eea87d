"""Greedy reward-rate policy.

With identical processors the argmax over matchings of the summed index is
the same as taking the ``min(K, F)`` waiting jobs of largest index, so that
is what :func:`greedy_action` does. Ties go to the smaller job id.
"""

from __future__ import annotations

import numpy as np

from .model import WAITING_CODE, Instance, Matching, State, canonical_matching


def greedy_order(indices, jobs):
    """``jobs`` sorted by decreasing index, ties by ascending id."""
    return sorted(jobs, key=lambda j: (-indices[j], j))


def greedy_action(state: State, instance: Instance) -> Matching:
    """Start the ``min(K, F)`` waiting jobs with the largest reward rate at ``state.t``."""
    waiting = state.waiting
    free = state.free_processors
    m = min(len(waiting), len(free))
    if m == 0:
        return Matching()
    t = min(state.t, instance.horizon)
    idx = instance.greedy_indices[:, t]
    return canonical_matching(state, greedy_order(idx, waiting)[:m])


class GreedyPolicy:
    """:func:`greedy_action` as a policy object, with a vectorized hook for the exact evaluator."""

    def __init__(self, instance: Instance):
        self.instance = instance

    def __call__(self, state: State, instance: Instance = None) -> Matching:
        return greedy_action(state, instance or self.instance)

    def choices(self, config, actions) -> np.ndarray:
        T = self.instance.horizon
        if len(actions) == 1:
            return np.zeros(T + 1, dtype=np.int32)
        waiting = np.array([j for j, c in enumerate(config) if c == WAITING_CODE])
        m = len(actions[0])
        idx = self.instance.greedy_indices[waiting]
        # stable sort keeps ascending job ids among equal indices
        top = np.sort(waiting[np.argsort(-idx, axis=0, kind="stable")[:m]], axis=0)
        pos = {a: i for i, a in enumerate(actions)}
        return np.array([pos[tuple(int(j) for j in top[:, t])] for t in range(T + 1)], dtype=np.int32)


def greedy_value(instance: Instance) -> float:
    """Exact expected total reward of the greedy policy from the initial state."""
    from .dp import evaluate_policy_exact

    return evaluate_policy_exact(instance, GreedyPolicy(instance))
