"""Jobs, decaying rewards, service-time distributions and the observable system state.

Time is slotted and 0-based: a job started in slot ``t`` with service time
``sigma`` completes at slot ``t + sigma`` and earns ``w(t + sigma)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Union

import numpy as np

PMF_TOL = 1e-12

# per-job codes of a canonical configuration; ages are >= 0
WAITING_CODE = -1
DONE_CODE = -2

REWARD_KINDS = ("step", "two-step", "linear", "parabolic", "exponential", "table")
SERVICE_KINDS = ("geometric", "deterministic", "empirical")

_REWARD_PARAMS = {
    "step": ("value", "deadline"),
    "two-step": ("high", "first_deadline", "low", "second_deadline"),
    "linear": ("value", "deadline"),
    "parabolic": ("value", "deadline"),
    "exponential": ("value", "rate", "horizon"),
    "table": ("values",),
}


class ValidationError(ValueError):
    """Raised when a model object or state violates its invariants."""


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Rewards


@dataclass(frozen=True)
class RewardFn:
    """Non-increasing, non-negative reward curve ``w(t)``, zero after ``horizon``.

    Build instances with the kind-specific constructors (:meth:`step`,
    :meth:`linear`, ...). ``params`` holds the constructor arguments in the
    order listed in ``param_names``.
    """

    kind: str
    params: tuple
    horizon: int
    values: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        v = self.values
        if self.horizon < 0 or len(v) != self.horizon + 1:
            raise ValidationError("reward table must cover slots 0..horizon")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError(f"{self.kind} reward has negative or non-finite values")
        rises = np.flatnonzero(np.diff(v) > 0)
        if rises.size:
            t = int(rises[0])
            raise ValidationError(
                f"{self.kind} reward increases between slots {t} and {t + 1}: "
                f"{v[t]!r} -> {v[t + 1]!r}"
            )

    def __hash__(self):
        return hash((self.kind, self.params, self.horizon))

    @property
    def param_names(self) -> tuple:
        return _REWARD_PARAMS[self.kind]

    def __call__(self, t: int) -> float:
        return eval_reward(self, t)

    # constructors ---------------------------------------------------------

    @classmethod
    def step(cls, value: float, deadline: int) -> "RewardFn":
        """``value`` up to and including ``deadline``, then 0."""
        deadline = int(deadline)
        if deadline < 0:
            raise ValidationError("deadline must be >= 0")
        return cls("step", (float(value), deadline), deadline, _readonly(np.full(deadline + 1, float(value))))

    @classmethod
    def constant(cls, value: float, horizon: int) -> "RewardFn":
        return cls.step(value, horizon)

    @classmethod
    def two_step(cls, high: float, first_deadline: int, low: float, second_deadline: int) -> "RewardFn":
        d1, d2 = int(first_deadline), int(second_deadline)
        if not 0 <= d1 < d2:
            raise ValidationError("two-step deadlines must satisfy 0 <= first < second")
        t = np.arange(d2 + 1)
        v = np.where(t <= d1, float(high), float(low))
        return cls("two-step", (float(high), d1, float(low), d2), d2, _readonly(v))

    @classmethod
    def linear(cls, value: float, deadline: int) -> "RewardFn":
        """Straight line from ``(0, value)`` down to ``(deadline, 0)``."""
        d = int(deadline)
        if d < 1:
            raise ValidationError("linear deadline must be >= 1")
        t = np.arange(d + 1)
        return cls("linear", (float(value), d), d, _readonly(float(value) * (1.0 - t / d)))

    @classmethod
    def parabolic(cls, value: float, deadline: int) -> "RewardFn":
        """Concave arc ``value * (1 - (t/deadline)^2)`` through ``(deadline, 0)``."""
        d = int(deadline)
        if d < 1:
            raise ValidationError("parabolic deadline must be >= 1")
        t = np.arange(d + 1)
        return cls("parabolic", (float(value), d), d, _readonly(float(value) * (1.0 - (t / d) ** 2)))

    @classmethod
    def exponential(cls, value: float, rate: float, horizon: int) -> "RewardFn":
        """``value * exp(-rate * t)`` truncated to 0 after ``horizon``."""
        h = int(horizon)
        if rate < 0:
            raise ValidationError("decay rate must be >= 0")
        v = float(value) * np.exp(-float(rate) * np.arange(h + 1))
        return cls("exponential", (float(value), float(rate), h), h, _readonly(v))

    @classmethod
    def table(cls, values: Sequence[float]) -> "RewardFn":
        v = tuple(float(x) for x in values)
        if not v:
            raise ValidationError("reward table is empty")
        return cls("table", (v,), len(v) - 1, _readonly(v))

    @classmethod
    def from_params(cls, kind: str, **params) -> "RewardFn":
        builders = {
            "step": cls.step,
            "two-step": cls.two_step,
            "linear": cls.linear,
            "parabolic": cls.parabolic,
            "exponential": cls.exponential,
            "table": cls.table,
        }
        if kind not in builders:
            raise ValidationError(f"unknown reward kind {kind!r}")
        return builders[kind](**params)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name, value in zip(self.param_names, self.params):
            d[name] = list(value) if isinstance(value, tuple) else value
        return d

    def scaled(self, c: float) -> "RewardFn":
        """The same curve multiplied by ``c > 0`` (as a table)."""
        return RewardFn.table(self.values * c)

    def stretched(self, factor: int) -> "RewardFn":
        """Time dilation ``w_L(t) = w(floor(t / L))`` (as a table)."""
        L = int(factor)
        if L < 1:
            raise ValidationError("stretch factor must be >= 1")
        return RewardFn.table(np.repeat(self.values, L))


def eval_reward(fn: RewardFn, t: int) -> float:
    """``w(t)``; zero past the horizon."""
    if t < 0:
        raise ValueError("slot index must be non-negative")
    return float(fn.values[t]) if t <= fn.horizon else 0.0


# ---------------------------------------------------------------------------
# Service times


@dataclass(frozen=True)
class ServiceDist:
    """Distribution of an integer service time ``sigma >= 1``.

    ``geometric`` has parameter ``p`` (``P(sigma=k) = p (1-p)^(k-1)``),
    ``deterministic`` a single value ``d``, and ``empirical`` a pmf over
    ``1..s_max`` given as ``pmf[0] = P(sigma=1)``.
    """

    kind: str
    p: float = 1.0
    d: int = 1
    pmf: tuple = ()

    def __post_init__(self):
        if self.kind == "geometric":
            if not 0.0 < self.p <= 1.0:
                raise ValidationError(f"geometric parameter must lie in (0, 1], got {self.p}")
        elif self.kind == "deterministic":
            if int(self.d) != self.d or self.d < 1:
                raise ValidationError(f"deterministic service time must be a positive integer, got {self.d}")
        elif self.kind == "empirical":
            pmf = np.asarray(self.pmf, dtype=float)
            if pmf.ndim != 1 or pmf.size == 0:
                raise ValidationError("empirical pmf must be a non-empty sequence")
            if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
                raise ValidationError("empirical pmf has negative or non-finite entries")
            if abs(pmf.sum() - 1.0) > PMF_TOL:
                raise ValidationError(f"empirical pmf sums to {pmf.sum()!r}, not 1")
            if pmf[-1] == 0:
                raise ValidationError("empirical pmf must not end with zero mass")
        else:
            raise ValidationError(f"unknown service kind {self.kind!r}")

    @classmethod
    def geometric(cls, p: float) -> "ServiceDist":
        return cls("geometric", p=float(p))

    @classmethod
    def deterministic(cls, d: int) -> "ServiceDist":
        return cls("deterministic", d=int(d))

    @classmethod
    def empirical(cls, pmf: Sequence[float]) -> "ServiceDist":
        pmf = [float(x) for x in pmf]
        while len(pmf) > 1 and pmf[-1] == 0.0:
            pmf.pop()
        return cls("empirical", pmf=tuple(pmf))

    @property
    def is_geometric(self) -> bool:
        return self.kind == "geometric"

    @property
    def s_max(self) -> Optional[int]:
        """Largest support point, ``None`` for the geometric case."""
        if self.kind == "deterministic":
            return self.d
        if self.kind == "empirical":
            return len(self.pmf)
        return None

    @cached_property
    def mass(self) -> np.ndarray:
        """Finite pmf as an array indexed by ``sigma`` (entry 0 unused). Not for geometric."""
        if self.kind == "deterministic":
            m = np.zeros(self.d + 1)
            m[self.d] = 1.0
        elif self.kind == "empirical":
            m = np.concatenate([[0.0], self.pmf])
        else:
            raise TypeError("geometric service has infinite support")
        m.setflags(write=False)
        return m

    @property
    def mean(self) -> float:
        if self.kind == "geometric":
            return 1.0 / self.p
        if self.kind == "deterministic":
            return float(self.d)
        return float(np.dot(np.arange(1, len(self.pmf) + 1), self.pmf))

    def prob(self, k: int) -> float:
        """``P(sigma = k)``."""
        if k < 1:
            return 0.0
        if self.kind == "geometric":
            return self.p * (1.0 - self.p) ** (k - 1)
        m = self.mass
        return float(m[k]) if k < len(m) else 0.0

    def survival(self, x) -> np.ndarray:
        """``P(sigma > x)`` for integer ``x >= 0`` (vectorized)."""
        x = np.asarray(x)
        if self.kind == "geometric":
            return (1.0 - self.p) ** x
        tail = np.concatenate([1.0 - np.cumsum(self.mass), [0.0]])
        tail = np.clip(tail, 0.0, 1.0)
        return tail[np.minimum(x, len(tail) - 1)]

    def cdf(self, x) -> np.ndarray:
        return 1.0 - self.survival(x)

    def hazard(self, age: int) -> float:
        """Probability of finishing in the current slot after ``age`` slots of service."""
        if self.kind == "geometric":
            return self.p
        if self.kind == "deterministic":
            if age >= self.d:
                raise ValueError(f"age {age} exceeds deterministic service time {self.d}")
            return 1.0 if age == self.d - 1 else 0.0
        pmf = self.pmf
        if age >= len(pmf):
            raise ValueError(f"age {age} beyond the support of the service distribution")
        rest = math.fsum(pmf[age:])
        return min(1.0, pmf[age] / rest)

    def residual(self, age: int) -> "ServiceDist":
        """Conditional law of the remaining time ``sigma - age`` given ``sigma > age``."""
        if age < 0:
            raise ValueError("age must be >= 0")
        if age == 0 or self.kind == "geometric":
            return self
        if self.kind == "deterministic":
            if age >= self.d:
                raise ValueError(f"job with deterministic service {self.d} cannot have age {age}")
            return ServiceDist.deterministic(self.d - age)
        rest = np.asarray(self.pmf[age:], dtype=float)
        total = rest.sum()
        if total <= 0:
            raise ValueError(f"age {age} has zero probability under this distribution")
        rest = rest / total
        rest[-1] = 1.0 - rest[:-1].sum()
        return ServiceDist.empirical(rest)

    def to_dict(self) -> dict:
        if self.kind == "geometric":
            return {"kind": "geometric", "p": self.p}
        if self.kind == "deterministic":
            return {"kind": "deterministic", "d": self.d}
        return {"kind": "empirical", "pmf": list(self.pmf)}

    @classmethod
    def from_params(cls, kind: str, **params) -> "ServiceDist":
        if kind == "geometric":
            return cls.geometric(**params)
        if kind == "deterministic":
            return cls.deterministic(**params)
        if kind == "empirical":
            return cls.empirical(**params)
        raise ValidationError(f"unknown service kind {kind!r}")


# ---------------------------------------------------------------------------
# Jobs and instances


@dataclass(frozen=True)
class Job:
    id: int
    reward: RewardFn
    service: ServiceDist


@dataclass(frozen=True)
class Instance:
    """``J`` jobs, ``N`` identical unit-rate processors and a horizon ``T_max``."""

    jobs: tuple
    n_processors: int
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if not self.jobs:
            raise ValidationError("an instance needs at least one job")
        if self.n_processors < 1:
            raise ValidationError("an instance needs at least one processor")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        for j, job in enumerate(self.jobs):
            if job.id != j:
                raise ValidationError(f"job at position {j} has id {job.id}")
            if job.reward.horizon > self.horizon:
                raise ValidationError(
                    f"job {j} reward is non-zero up to slot {job.reward.horizon} > horizon {self.horizon}"
                )

    @classmethod
    def build(cls, rewards: Sequence[RewardFn], services: Sequence[ServiceDist],
              n_processors: int = 1, horizon: Optional[int] = None) -> "Instance":
        """Assemble jobs from parallel reward/service lists; horizon defaults to the latest reward horizon."""
        if len(rewards) != len(services):
            raise ValidationError("rewards and services differ in length")
        if horizon is None:
            horizon = max(max(r.horizon for r in rewards), 1)
        jobs = tuple(Job(j, r, s) for j, (r, s) in enumerate(zip(rewards, services)))
        return cls(jobs, int(n_processors), int(horizon))

    def __hash__(self):
        return hash((self.jobs, self.n_processors, self.horizon))

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @cached_property
    def completion_rewards(self) -> np.ndarray:
        """``E[w_j(t + sigma_j)]`` for every job (rows) and ``t = 0..horizon`` (columns)."""
        T = self.horizon
        out = np.zeros((self.n_jobs, T + 1))
        for job in self.jobs:
            out[job.id] = _completion_reward_curve(job, T)
        out.setflags(write=False)
        return out

    @cached_property
    def greedy_indices(self) -> np.ndarray:
        """Reward-rate index ``E[w_j(t + sigma_j)] / E[sigma_j]`` per job and slot."""
        means = np.array([job.service.mean for job in self.jobs])
        out = self.completion_rewards / means[:, None]
        out.setflags(write=False)
        return out

    @property
    def initial_state(self) -> "State":
        return State.initial(self)

    def without_job(self, j: int) -> "Instance":
        """Same instance with job ``j`` deleted (remaining jobs relabelled in order)."""
        kept = [job for job in self.jobs if job.id != j]
        if not kept:
            raise ValidationError("cannot delete the only job")
        return Instance.build([k.reward for k in kept], [k.service for k in kept],
                              self.n_processors, self.horizon)

    def permuted(self, order: Sequence[int]) -> "Instance":
        """Relabel jobs so that new job ``i`` is old job ``order[i]``."""
        jobs = [self.jobs[k] for k in order]
        return Instance.build([k.reward for k in jobs], [k.service for k in jobs],
                              self.n_processors, self.horizon)

    def map_rewards(self, fn) -> "Instance":
        return Instance.build([fn(job.reward) for job in self.jobs],
                              [job.service for job in self.jobs],
                              self.n_processors, self.horizon)


def _completion_reward_curve(job: Job, T: int) -> np.ndarray:
    w = np.zeros(T + 2)
    h = min(job.reward.horizon, T)
    w[: h + 1] = job.reward.values[: h + 1]
    dist = job.service
    if dist.is_geometric:
        # E_t = p w(t+1) + (1-p) E_{t+1}; exact since w vanishes after T.
        p = dist.p
        out = np.zeros(T + 2)
        for t in range(T, -1, -1):
            out[t] = p * w[t + 1] + (1.0 - p) * out[t + 1]
        return out[: T + 1]
    mass = dist.mass
    w = np.concatenate([w, np.zeros(len(mass))])
    out = np.zeros(T + 1)
    for k in np.flatnonzero(mass):
        out += mass[k] * w[k: k + T + 1]
    return out


def expected_completion_reward(job: Job, t: int) -> float:
    """``E[w_j(t + sigma_j)]``: expected reward of starting ``job`` in slot ``t``."""
    if t < 0:
        raise ValueError("slot index must be non-negative")
    return float(_completion_reward_curve(job, max(t, job.reward.horizon))[t])


def greedy_index(job: Job, t: int) -> float:
    """Expected reward rate ``E[w(t + sigma)] / E[sigma]`` of starting ``job`` now."""
    return expected_completion_reward(job, t) / job.service.mean


# ---------------------------------------------------------------------------
# State


@dataclass(frozen=True)
class Waiting:
    def __repr__(self):
        return "Waiting"


@dataclass(frozen=True)
class InService:
    processor: int
    start_slot: int


@dataclass(frozen=True)
class Done:
    start_slot: Optional[int] = None


JobStatus = Union[Waiting, InService, Done]
WAITING = Waiting()


@dataclass(frozen=True)
class Matching:
    """Job-to-processor pairs started in the current slot."""

    pairs: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(j), int(n)) for j, n in self.pairs))
        jobs = [j for j, _ in self.pairs]
        procs = [n for _, n in self.pairs]
        if len(set(jobs)) != len(jobs) or len(set(procs)) != len(procs):
            raise ValidationError(f"matching uses a job or processor twice: {sorted(self.pairs)}")

    @property
    def jobs(self) -> tuple:
        return tuple(sorted(j for j, _ in self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))


@dataclass(frozen=True)
class State:
    """Observable state at the start of slot ``t``.

    ``jobs[j]`` is the status of job ``j``; ``processors[n]`` is the job on
    processor ``n`` or ``None`` when it is free.
    """

    t: int
    jobs: tuple
    processors: tuple

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "processors", tuple(self.processors))
        if self.t < 0:
            raise ValidationError("slot index must be non-negative")
        for j, st in enumerate(self.jobs):
            if isinstance(st, InService):
                if not 0 <= st.processor < len(self.processors):
                    raise ValidationError(f"job {j} on unknown processor {st.processor}")
                if self.processors[st.processor] != j:
                    raise ValidationError(f"job {j} claims processor {st.processor}, which holds {self.processors[st.processor]}")
                if not 0 <= st.start_slot < self.t:
                    raise ValidationError(f"job {j} start slot {st.start_slot} not before t={self.t}")
            elif not isinstance(st, (Waiting, Done)):
                raise ValidationError(f"bad status for job {j}: {st!r}")
        for n, j in enumerate(self.processors):
            if j is None:
                continue
            if not 0 <= j < len(self.jobs):
                raise ValidationError(f"processor {n} holds unknown job {j}")
            st = self.jobs[j]
            if not (isinstance(st, InService) and st.processor == n):
                raise ValidationError(f"processor {n} holds job {j} whose status is {st!r}")

    @classmethod
    def initial(cls, instance: Instance) -> "State":
        return cls(0, (WAITING,) * instance.n_jobs, (None,) * instance.n_processors)

    @property
    def waiting(self) -> tuple:
        return tuple(j for j, s in enumerate(self.jobs) if isinstance(s, Waiting))

    @property
    def in_service(self) -> tuple:
        return tuple(j for j, s in enumerate(self.jobs) if isinstance(s, InService))

    @property
    def free_processors(self) -> tuple:
        return tuple(n for n, j in enumerate(self.processors) if j is None)

    @property
    def all_done(self) -> bool:
        return all(isinstance(s, Done) for s in self.jobs)

    def check(self, instance: Instance) -> None:
        if len(self.jobs) != instance.n_jobs or len(self.processors) != instance.n_processors:
            raise ValidationError("state dimensions do not match the instance")
        for j in self.in_service:
            st = self.jobs[j]
            age = self.t - st.start_slot
            s_max = instance.jobs[j].service.s_max
            if s_max is not None and age >= s_max:
                raise ValidationError(f"job {j} has been in service {age} slots, beyond its support {s_max}")

    def age(self, j: int) -> int:
        st = self.jobs[j]
        if not isinstance(st, InService):
            raise ValueError(f"job {j} is not in service")
        return self.t - st.start_slot

    # (x, y, z) indicator encoding

    def to_xyz(self) -> tuple:
        """Completion flags ``x``, start slots ``y`` (None if not started), processor jobs ``z`` (None if free)."""
        x, y = [], []
        for st in self.jobs:
            x.append(0 if isinstance(st, Done) else 1)
            y.append(None if isinstance(st, Waiting) else st.start_slot)
        return tuple(x), tuple(y), tuple(self.processors)

    @classmethod
    def from_xyz(cls, t: int, x, y, z) -> "State":
        where = {j: n for n, j in enumerate(z) if j is not None}
        jobs = []
        for j, (xj, yj) in enumerate(zip(x, y)):
            if xj == 0:
                jobs.append(Done(yj))
            elif yj is None:
                jobs.append(WAITING)
            else:
                if j not in where:
                    raise ValidationError(f"job {j} started at {yj} but is on no processor")
                jobs.append(InService(where[j], yj))
        return cls(t, tuple(jobs), tuple(z))

    def apply(self, matching: Matching) -> "State":
        """State within slot ``t`` after starting the matched jobs (no time advance)."""
        jobs = list(self.jobs)
        procs = list(self.processors)
        for j, n in matching:
            jobs[j] = InService(n, self.t)
            procs[n] = j
        # start_slot == t is legal only transiently, so bypass validation here.
        s = object.__new__(State)
        object.__setattr__(s, "t", self.t)
        object.__setattr__(s, "jobs", tuple(jobs))
        object.__setattr__(s, "processors", tuple(procs))
        return s


def check_matching(state: State, matching: Matching, *, non_idling: bool = True) -> None:
    """Raise :class:`ValidationError` unless ``matching`` is feasible in ``state``."""
    waiting = set(state.waiting)
    free = set(state.free_processors)
    for j, n in matching:
        if j not in waiting:
            raise ValidationError(f"job {j} is not waiting at t={state.t}")
        if n not in free:
            raise ValidationError(f"processor {n} is not free at t={state.t}")
    if non_idling and len(matching) != min(len(waiting), len(free)):
        raise ValidationError(
            f"matching of size {len(matching)} idles: {len(waiting)} waiting, {len(free)} free at t={state.t}"
        )


def canonical_matching(state: State, jobs: Sequence[int]) -> Matching:
    """Assign ``jobs`` (ascending id) to free processors in ascending index."""
    free = state.free_processors
    jobs = sorted(jobs)
    if len(jobs) > len(free):
        raise ValidationError(f"{len(jobs)} jobs but only {len(free)} free processors")
    return Matching(frozenset(zip(jobs, free)))


def iter_matchings(state: State, *, non_idling: bool = True) -> Iterator[Matching]:
    """Canonical matchings in lexicographic order of their job sets."""
    waiting, free = state.waiting, state.free_processors
    m = min(len(waiting), len(free))
    sizes = [m] if non_idling else range(m + 1)
    for k in sizes:
        for combo in itertools.combinations(waiting, k):
            yield Matching(frozenset(zip(combo, free)))


def feasible_matchings(state: State, instance: Instance) -> list:
    """All non-idling matchings (``|A| = min(K, F)``), one per job subset."""
    state.check(instance)
    return list(iter_matchings(state))


def residual_dist(state: State, job: Job) -> ServiceDist:
    """Law of the remaining service time of ``job`` as seen from ``state``."""
    st = state.jobs[job.id]
    if isinstance(st, Done):
        raise ValueError(f"job {job.id} is already done")
    if isinstance(st, Waiting):
        return job.service
    return job.service.residual(state.t - st.start_slot)
