"""Exhaustive ground truth for deterministic instances and 0/1 multiple knapsack."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .model import Instance, RewardFn, ServiceDist, ValidationError


def brute_force_deterministic(instance: Instance) -> float:
    """Best total reward over every assignment of jobs to processors and every order on each.

    Jobs on a processor run back to back from slot 0. Given an assignment the
    processors are independent, so the best order is searched per job subset
    and the assignments are then enumerated in full.
    """
    if any(job.service.kind != "deterministic" for job in instance.jobs):
        raise ValidationError("brute force needs deterministic service times")
    J, N = instance.n_jobs, instance.n_processors
    if J > 8 or N > 3:
        raise ValidationError(f"instance too large for brute force (J={J}, N={N})")
    sigma = [job.service.d for job in instance.jobs]
    rewards = [job.reward for job in instance.jobs]

    @lru_cache(maxsize=None)
    def best_single(subset: frozenset) -> float:
        best = 0.0
        for order in itertools.permutations(sorted(subset)):
            t, total = 0, 0.0
            for j in order:
                t += sigma[j]
                total += rewards[j](t)
            best = max(best, total)
        return best

    best = 0.0
    for assign in itertools.product(range(N), repeat=J):
        total = sum(best_single(frozenset(j for j in range(J) if assign[j] == n)) for n in range(N))
        best = max(best, total)
    return best


@dataclass(frozen=True)
class KnapsackInstance:
    values: tuple
    sizes: tuple
    n_knapsacks: int
    capacity: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if len(self.values) != len(self.sizes):
            raise ValidationError("values and sizes differ in length")
        if len(self.values) > 20:
            raise ValidationError("exhaustive knapsack search is limited to 20 items")
        if any(v <= 0 for v in self.values) or any(s <= 0 for s in self.sizes):
            raise ValidationError("values and sizes must be positive")
        if self.n_knapsacks < 1 or self.capacity < 0:
            raise ValidationError("need at least one knapsack and a non-negative capacity")


def knapsack_bruteforce(kp: KnapsackInstance) -> float:
    """Maximum packed value, by depth-first search over item placements.

    Knapsacks with equal remaining room are interchangeable, so only one of
    them is tried; branches that cannot beat the incumbent even by packing
    every remaining item are cut.
    """
    order = sorted(range(len(kp.values)), key=lambda j: -kp.values[j])
    vals = [kp.values[j] for j in order]
    sizes = [kp.sizes[j] for j in order]
    suffix = [0.0] * (len(vals) + 1)
    for i in range(len(vals) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + vals[i]
    room = [kp.capacity] * kp.n_knapsacks
    best = 0.0

    def dfs(i: int, acc: float):
        nonlocal best
        if acc > best:
            best = acc
        if i == len(vals) or acc + suffix[i] <= best:
            return
        tried = set()
        for n in range(len(room)):
            r = room[n]
            if r >= sizes[i] and r not in tried:
                tried.add(r)
                room[n] -= sizes[i]
                dfs(i + 1, acc + vals[i])
                room[n] += sizes[i]
        dfs(i + 1, acc)

    dfs(0, 0.0)
    return best


def knapsack_as_schedule(kp: KnapsackInstance, horizon: int = None) -> Instance:
    """Deterministic scheduling instance with a common deadline equal to the capacity."""
    horizon = max(kp.capacity, 1) if horizon is None else horizon
    rewards = [RewardFn.step(v, kp.capacity) for v in kp.values]
    services = [ServiceDist.deterministic(s) for s in kp.sizes]
    return Instance.build(rewards, services, kp.n_knapsacks, horizon)

