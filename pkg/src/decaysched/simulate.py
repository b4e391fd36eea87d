"""Seeded Monte Carlo runs of scheduling policies.

Service times for replication ``r`` come from a Philox (counter-based)
stream keyed by ``(seed, r)``; job ``j`` always takes the ``j``-th uniform of
that stream. Two policies run on the same ``(seed, r)`` therefore see the same
service times regardless of the order in which they start jobs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .model import Done, InService, Instance, Matching, State, ValidationError, WAITING, check_matching

Policy = Callable[[State, Instance], Matching]


@dataclass(frozen=True)
class SampledScenario:
    sigma: tuple
    seed: int = 0
    replication: int = 0


@dataclass(frozen=True)
class JobRecord:
    job: int
    start: Optional[int]
    completion: Optional[int]
    reward: float


@dataclass(frozen=True)
class RunTrace:
    records: tuple

    @property
    def total(self) -> float:
        return math.fsum(r.reward for r in self.records)


class PolicyError(ValidationError):
    """The policy chose an infeasible matching during a run; ``trace`` holds the run so far."""

    def __init__(self, message, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def _uniforms(seed: int, replication: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence([int(seed), int(replication)])
    return np.random.Generator(np.random.Philox(ss)).random(n)


def _inverse_cdf(dist, u: float) -> int:
    if dist.kind == "geometric":
        if dist.p >= 1.0:
            return 1
        return max(1, math.ceil(math.log1p(-u) / math.log1p(-dist.p)))
    if dist.kind == "deterministic":
        return dist.d
    cdf = np.cumsum(dist.pmf)
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)) + 1


def sample_service_times(instance: Instance, seed: int, replication: int) -> SampledScenario:
    """One independent service time per job by inverse CDF."""
    u = _uniforms(seed, replication, instance.n_jobs)
    sigma = tuple(_inverse_cdf(job.service, float(u[job.id])) for job in instance.jobs)
    return SampledScenario(sigma, seed, replication)


def run_policy_on_sample(instance: Instance, policy: Policy, scenario: SampledScenario) -> RunTrace:
    """Play ``policy`` slot by slot against the realized service times.

    The policy only ever sees the observable :class:`State`. Jobs still
    waiting after ``T_max`` never start and earn nothing; jobs running past the
    horizon complete with zero reward.
    """
    J, N, T = instance.n_jobs, instance.n_processors, instance.horizon
    sigma = scenario.sigma
    jobs = [WAITING] * J
    procs: List[Optional[int]] = [None] * N
    start: List[Optional[int]] = [None] * J
    finish: List[Optional[int]] = [None] * J

    def trace():
        recs = []
        for j in range(J):
            r = instance.jobs[j].reward(finish[j]) if finish[j] is not None else 0.0
            recs.append(JobRecord(j, start[j], finish[j], r))
        return RunTrace(tuple(recs))

    t = 0
    while t <= T:
        for n, j in enumerate(procs):
            if j is not None and finish[j] == t:
                jobs[j] = Done(start[j])
                procs[n] = None
        waiting = [j for j in range(J) if jobs[j] is WAITING]
        if not waiting:
            break
        if None in procs:
            state = State(t, tuple(jobs), tuple(procs))
            m = policy(state, instance)
            try:
                check_matching(state, m, non_idling=False)
            except ValidationError as exc:
                raise PolicyError(f"infeasible action at t={t}: {exc}", trace()) from exc
            for j, n in m:
                jobs[j] = InService(n, t)
                procs[n] = j
                start[j] = t
                finish[j] = t + sigma[j]
            if any(jobs[j] is WAITING for j in range(J)) and None in procs:
                t += 1
                continue
        running = [finish[j] for j in procs if j is not None]
        t = min(running) if running else t + 1
    return trace()


def monte_carlo_evaluate(instance: Instance, policy: Policy, n_reps: int, seed: int = 0):
    """Mean total reward and its standard error over replications ``0..n_reps-1``."""
    totals = simulate_totals(instance, policy, n_reps, seed)
    return float(np.mean(totals)), _stderr(totals)


def simulate_totals(instance: Instance, policy: Policy, n_reps: int, seed: int = 0) -> np.ndarray:
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    return np.array([
        run_policy_on_sample(instance, policy, sample_service_times(instance, seed, r)).total
        for r in range(n_reps)
    ])


def _stderr(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(np.std(x, ddof=1) / math.sqrt(len(x)))


@dataclass(frozen=True)
class PairedComparison:
    """Paired statistics of policy A against policy B on common service times."""

    mean_a: float
    mean_b: float
    ratio: float
    mean_diff: float
    diff_stderr: float
    n_reps: int
    totals_a: np.ndarray
    totals_b: np.ndarray


def compare_policies_crn(instance: Instance, policy_a: Policy, policy_b: Policy,
                         n_reps: int, seed: int = 0) -> PairedComparison:
    """Run both policies on identical scenarios; ``ratio`` is ``sum(A) / sum(B)``."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    a = np.empty(n_reps)
    b = np.empty(n_reps)
    for r in range(n_reps):
        sc = sample_service_times(instance, seed, r)
        a[r] = run_policy_on_sample(instance, policy_a, sc).total
        b[r] = run_policy_on_sample(instance, policy_b, sc).total
    sa, sb = float(np.sum(a)), float(np.sum(b))
    ratio = sa / sb if sb > 0 else (1.0 if sa == 0 else math.inf)
    d = a - b
    return PairedComparison(sa / n_reps, sb / n_reps, ratio, float(np.mean(d)), _stderr(d), n_reps, a, b)


TRACE_COLUMNS = ("replication", "job_id", "start_slot", "completion_slot", "reward")


def write_traces(fp, traces: Sequence[RunTrace], replications: Optional[Sequence[int]] = None) -> None:
    """CSV with one row per job per replication; blank slots for jobs never started."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    reps = range(len(traces)) if replications is None else replications
    for r, tr in zip(reps, traces):
        for rec in tr.records:
            w.writerow([r, rec.job,
                        "" if rec.start is None else rec.start,
                        "" if rec.completion is None else rec.completion,
                        f"{rec.reward:.9g}"])
