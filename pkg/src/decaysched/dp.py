"""Exact finite-horizon dynamic programming over canonical states.

A canonical configuration is a tuple with one code per job:

* ``WAITING`` (-1): not yet started,
* ``DONE`` (-2): completed,
* ``a >= 0``: in service for ``a`` slots (always 0 for geometric jobs, whose
  elapsed age is irrelevant by memorylessness).

Processors are identical, so which processor holds a job is dropped from the
key; a canonical state key is ``(t, configuration)``. Each configuration keeps
a value vector over ``t = 0..T_max`` and the backward recursion is evaluated
for all slots at once. Rewards are credited when a job starts (the expected
completion reward ``E[w(t + sigma)]``), so configurations without waiting jobs
have value 0.
"""

from __future__ import annotations

import functools
import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .model import (
    DONE_CODE, WAITING_CODE, Done, InService, Instance, Matching, State,
    ValidationError, WAITING, canonical_matching, check_matching,
)

DEFAULT_CAP = 50_000_000
PROB_TOL = 1e-12

Config = Tuple[int, ...]
StateKey = Tuple[int, Config]


class StateSpaceError(RuntimeError):
    """The requested solve exceeds the configured (state, action) evaluation cap."""

    def __init__(self, message: str, dimension: str, estimate: float, cap: float):
        super().__init__(message)
        self.dimension = dimension
        self.estimate = estimate
        self.cap = cap


class InfeasibleActionError(ValidationError):
    """A policy returned a matching that is not a feasible non-idling action."""

    def __init__(self, message: str, state: Optional[State] = None):
        super().__init__(message)
        self.state = state


# ---------------------------------------------------------------------------
# Full-state transition kernel


def transition_distribution(state: State, action: Matching, instance: Instance) -> List[Tuple[State, float]]:
    """Distribution of the state at ``t + 1`` after starting ``action`` in ``state``.

    Every job in service (including the ones just matched) finishes in this
    slot with its hazard given its elapsed service, independently of the others.
    """
    state.check(instance)
    try:
        check_matching(state, action)
    except ValidationError as exc:
        raise InfeasibleActionError(str(exc), state) from exc
    mid = state.apply(action)
    busy = mid.in_service
    hazards = []
    for j in busy:
        st = mid.jobs[j]
        hazards.append(instance.jobs[j].service.hazard(state.t - st.start_slot))

    out = []
    for finished in itertools.product((False, True), repeat=len(busy)):
        prob = 1.0
        for h, f in zip(hazards, finished):
            prob *= h if f else 1.0 - h
        if prob == 0.0:
            continue
        jobs = list(mid.jobs)
        procs = list(mid.processors)
        for j, f in zip(busy, finished):
            if f:
                st = jobs[j]
                jobs[j] = Done(st.start_slot)
                procs[st.processor] = None
        out.append((State(state.t + 1, tuple(jobs), tuple(procs)), prob))
    total = math.fsum(p for _, p in out)
    if abs(total - 1.0) > PROB_TOL:
        raise AssertionError(f"transition probabilities sum to {total!r}")
    return out


# ---------------------------------------------------------------------------
# Canonical kernel


def state_key(state: State, instance: Instance) -> StateKey:
    codes = []
    for j, st in enumerate(state.jobs):
        if isinstance(st, InService):
            codes.append(0 if instance.jobs[j].service.is_geometric else state.t - st.start_slot)
        elif isinstance(st, Done):
            codes.append(DONE_CODE)
        else:
            codes.append(WAITING_CODE)
    return state.t, tuple(codes)


def representative_state(key: StateKey, instance: Instance) -> Optional[State]:
    """A concrete observable state with the given key, or ``None`` if none can exist.

    In-service jobs sit on processors ``0, 1, ...`` in ascending job order;
    geometric jobs are given start slot ``t - 1``.
    """
    t, config = key
    busy = [j for j, c in enumerate(config) if c >= 0]
    if len(busy) > instance.n_processors:
        return None
    if t == 0 and any(c != WAITING_CODE for c in config):
        return None
    jobs = []
    procs = [None] * instance.n_processors
    slot = {j: n for n, j in enumerate(busy)}
    for j, c in enumerate(config):
        if c == WAITING_CODE:
            jobs.append(WAITING)
        elif c == DONE_CODE:
            jobs.append(Done())
        else:
            age = 1 if instance.jobs[j].service.is_geometric else c
            if age < 1 or age > t:
                return None
            jobs.append(InService(slot[j], t - age))
            procs[slot[j]] = j
    return State(t, tuple(jobs), tuple(procs))


class _Kernel:
    """Transition structure on canonical configurations (time-free)."""

    def __init__(self, instance: Instance, non_idling: bool = True):
        self.instance = instance
        self.non_idling = non_idling
        self.N = instance.n_processors
        self.T = instance.horizon
        self.rewards = instance.completion_rewards
        self.geometric = [job.service.is_geometric for job in instance.jobs]
        self._hazard = [self._hazards(job.service) for job in instance.jobs]
        self._post_cache: Dict[Config, List[Tuple[Config, float]]] = {}
        self._action_cache: Dict[Config, List[Tuple[int, ...]]] = {}
        self._orders: Dict[bool, List[Config]] = {}
        self._reward_cache: Dict[Tuple[int, ...], np.ndarray] = {}

    @staticmethod
    def _hazards(dist):
        if dist.is_geometric:
            return [dist.p]
        return [dist.hazard(a) for a in range(dist.s_max)]

    def hazard(self, j: int, code: int) -> float:
        h = self._hazard[j]
        return h[0] if self.geometric[j] else h[code]

    def actions(self, config: Config) -> List[Tuple[int, ...]]:
        hit = self._action_cache.get(config)
        if hit is not None:
            return hit
        waiting = [j for j, c in enumerate(config) if c == WAITING_CODE]
        free = self.N - sum(1 for c in config if c >= 0)
        m = min(len(waiting), free)
        sizes = [m] if self.non_idling else range(m + 1)
        out = [combo for k in sizes for combo in itertools.combinations(waiting, k)]
        self._action_cache[config] = out
        return out

    def after(self, config: Config, action: Tuple[int, ...]) -> List[Tuple[Config, float]]:
        """Next-slot configurations and probabilities after starting ``action``."""
        post = list(config)
        for j in action:
            post[j] = 0
        post = tuple(post)
        hit = self._post_cache.get(post)
        if hit is not None:
            return hit
        busy = [j for j, c in enumerate(post) if c >= 0]
        outcomes: Dict[Config, float] = {}
        for finished in itertools.product((False, True), repeat=len(busy)):
            prob = 1.0
            nxt = list(post)
            for j, f in zip(busy, finished):
                h = self.hazard(j, post[j])
                if f:
                    prob *= h
                    nxt[j] = DONE_CODE
                else:
                    prob *= 1.0 - h
                    nxt[j] = 0 if self.geometric[j] else post[j] + 1
            if prob > 0.0:
                key = tuple(nxt)
                outcomes[key] = outcomes.get(key, 0.0) + prob
        result = sorted(outcomes.items())
        total = math.fsum(p for _, p in result)
        if abs(total - 1.0) > PROB_TOL:
            raise AssertionError(f"transition probabilities sum to {total!r} from {post}")
        self._post_cache[post] = result
        return result

    def post(self, config: Config, action: Tuple[int, ...]) -> Config:
        """Configuration within the slot right after ``action`` starts (matched jobs at age 0)."""
        c = list(config)
        for j in action:
            c[j] = 0
        return tuple(c)

    def reward(self, action: Tuple[int, ...]) -> np.ndarray:
        hit = self._reward_cache.get(action)
        if hit is None:
            hit = self.rewards[list(action)].sum(axis=0) if action else np.zeros(self.T + 1)
            hit.setflags(write=False)
            self._reward_cache[action] = hit
        return hit


def _has_waiting(config: Config) -> bool:
    return WAITING_CODE in config


def _progress(config: Config) -> tuple:
    done = sum(1 for c in config if c == DONE_CODE)
    started = sum(1 for c in config if c != WAITING_CODE)
    return done, started, sum(c for c in config if c > 0)


def _ordered_configs(kernel: _Kernel, root: Config, post_decision: bool) -> List[Config]:
    """Reachable configurations, most advanced first.

    Every transition other than a self-loop strictly increases
    ``(done, started, total age)``, so sorting on it by decreasing order
    puts successors before their predecessors.
    """
    hit = kernel._orders.get(post_decision)
    if hit is not None:
        return hit
    seen = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for c in frontier:
            if not _has_waiting(c):
                continue
            actions = kernel.actions(c)
            if post_decision and actions != [()]:
                succ = [kernel.post(c, a) for a in actions]
            else:
                succ = [n for a in actions for n, _ in kernel.after(c, a)]
            for n in succ:
                if n not in seen:
                    seen.add(n)
                    nxt.append(n)
        frontier = nxt
    order = sorted(seen, key=_progress, reverse=True)
    kernel._orders[post_decision] = order
    return order


@functools.lru_cache(maxsize=4)
def _kernel(instance: Instance, non_idling: bool) -> _Kernel:
    # solving and then evaluating a policy on one instance share the enumeration
    return _Kernel(instance, non_idling)


def estimate_evaluations(instance: Instance, non_idling: bool = True) -> Tuple[float, dict]:
    """Upper estimate of (state, action) evaluations and its factors."""
    N, J = instance.n_processors, instance.n_jobs
    counts = np.zeros(N + 1)
    counts[0] = 1.0
    for job in instance.jobs:
        ages = 1 if job.service.is_geometric else max(job.service.s_max - 1, 0) + 1
        nxt = 2.0 * counts
        nxt[1:] += ages * counts[:-1]
        counts = nxt
    n_configs = counts.sum()
    m = min(J, N)
    n_actions = math.comb(J, m) if non_idling else sum(math.comb(J, k) for k in range(m + 1))
    factors = {
        "jobs": float(2.0 ** J * n_actions),
        "service support": float(n_configs / 2.0 ** J),
        "horizon": float(instance.horizon + 1),
    }
    return float(n_configs * n_actions * (instance.horizon + 1)), factors


def _check_cap(instance: Instance, cap: float, non_idling: bool) -> None:
    est, factors = estimate_evaluations(instance, non_idling)
    if est > cap:
        dim = max(factors, key=factors.get)
        raise StateSpaceError(
            f"state space too large: ~{est:.3g} (state, action) evaluations exceed the cap {cap:.3g}; "
            f"dominant dimension is {dim} (J={instance.n_jobs}, N={instance.n_processors}, "
            f"T_max={instance.horizon})",
            dim, est, cap,
        )


ChoiceFn = Callable[[Config, List[Tuple[int, ...]]], np.ndarray]


def _pick(base: np.ndarray) -> np.ndarray:
    """Per column, the first row within rounding of the column max."""
    best = base.max(axis=0)
    tol = 1e-12 * max(1.0, float(np.abs(best).max()))
    return np.argmax(base >= best - tol, axis=0).astype(np.int32)


def _pad(choice: np.ndarray) -> np.ndarray:
    out = np.zeros(len(choice) + 1, dtype=np.int32)
    out[:-1] = choice
    return out


def _backward(kernel: _Kernel, choose: Optional[ChoiceFn] = None, post_decision: bool = True):
    """Backward induction over reachable configurations, all slots at once.

    With ``choose=None`` maximize over actions (ties to the lexicographically
    first job set); otherwise ``choose(config, actions)`` gives, per slot, the
    index of the action taken.

    In ``post_decision`` mode (non-idling only) a decision leads to a
    configuration without free processors or without waiting jobs, whose value
    vector already is the expected continuation, so
    ``V_c[t] = max_A r_A[t] + V_post(c, A)[t]``. Otherwise the recursion sums
    over next-slot outcomes for every action, with a scalar pass over ``t``
    when an action can leave the configuration unchanged.
    """
    T = kernel.T
    root = tuple([WAITING_CODE] * kernel.instance.n_jobs)
    values: Dict[Config, np.ndarray] = {}
    table: Dict[Config, Tuple[List[Tuple[int, ...]], np.ndarray]] = {}
    zero_choice = np.zeros(T + 1, dtype=np.int32)
    cols = np.arange(T)
    for config in _ordered_configs(kernel, root, post_decision):
        actions = kernel.actions(config)
        if not _has_waiting(config):
            values[config] = np.zeros(T + 1)
            table[config] = (actions, zero_choice)
            continue
        V = np.zeros(T + 1)

        if post_decision and actions != [()]:
            base = np.stack([kernel.reward(a)[:T] + values[kernel.post(config, a)][:T] for a in actions])
            choice = _pick(base) if choose is None else np.asarray(choose(config, actions)[:T], dtype=np.int32)
            V[:T] = base[choice, cols]
            values[config] = V
            table[config] = (actions, _pad(choice))
            continue

        base = np.empty((len(actions), T))
        loop = np.zeros(len(actions))
        for i, a in enumerate(actions):
            b = kernel.reward(a)[:T].copy()
            for nxt, p in kernel.after(config, a):
                if nxt == config:
                    loop[i] += p
                else:
                    b += p * values[nxt][1:]
            base[i] = b
        if len(actions) == 1:
            choice = np.zeros(T, dtype=np.int32)
            if loop[0]:
                q, b, nxt_v = float(loop[0]), base[0].tolist(), 0.0
                for t in range(T - 1, -1, -1):
                    V[t] = nxt_v = b[t] + q * nxt_v
            else:
                V[:T] = base[0]
            values[config] = V
            table[config] = (actions, _pad(choice))
            continue
        if choose is not None:
            choice = np.asarray(choose(config, actions)[:T], dtype=np.int32)
            b, q = base[choice, cols].tolist(), loop[choice].tolist()
        elif not loop.any():
            choice = _pick(base)
        else:
            choice = None
            b, q = base.T.tolist(), loop.tolist()

        if not loop.any():
            V[:T] = base[choice, cols]
        elif choice is not None:
            nxt_v = 0.0
            for t in range(T - 1, -1, -1):
                V[t] = nxt_v = b[t] + q[t] * nxt_v
        else:
            choice = np.zeros(T, dtype=np.int32)
            nxt_v = 0.0
            for t in range(T - 1, -1, -1):
                cand = [x + l * nxt_v for x, l in zip(b[t], q)]
                best = max(cand)
                tol = 1e-12 * max(1.0, abs(best))
                k = next(i for i, c in enumerate(cand) if c >= best - tol)
                choice[t] = k
                V[t] = nxt_v = cand[k]
        values[config] = V
        table[config] = (actions, _pad(choice))
    return root, table, values


# ---------------------------------------------------------------------------
# Public API


@dataclass(frozen=True)
class PolicyEntry:
    jobs: Tuple[int, ...]
    value: float


class PolicyTable:
    """Optimal action and value for every reachable canonical state.

    Index with a canonical key ``(t, configuration)`` or a :class:`State`.
    Calling the table with ``(state, instance)`` makes it a policy.
    """

    def __init__(self, instance: Instance, root: Config, table, values, non_idling: bool = True):
        self.instance = instance
        self.root = root
        self.non_idling = non_idling
        self._table = table
        self._values = values

    @property
    def value0(self) -> float:
        """Optimal expected total reward from the initial state."""
        return float(self._values[self.root][0])

    def __len__(self):
        return len(self._table)

    def _lookup(self, key: StateKey) -> Tuple[Tuple[int, ...], float]:
        t, config = key
        if config not in self._table:
            raise KeyError(f"configuration {config} is not reachable")
        actions, choice = self._table[config]
        T = self.instance.horizon
        if t >= T:
            return (actions[0] if actions else ()), 0.0
        return actions[int(choice[t])], float(self._values[config][t])

    def __getitem__(self, key) -> PolicyEntry:
        if isinstance(key, State):
            key = state_key(key, self.instance)
        jobs, value = self._lookup(key)
        return PolicyEntry(jobs, value)

    def __contains__(self, key) -> bool:
        if isinstance(key, State):
            key = state_key(key, self.instance)
        return key[1] in self._table

    def value(self, state: State) -> float:
        return self[state].value

    def action(self, state: State) -> Matching:
        return canonical_matching(state, self[state].jobs)

    def __call__(self, state: State, instance: Optional[Instance] = None) -> Matching:
        return self.action(state)

    def choices(self, config: Config, actions) -> np.ndarray:
        own_actions, choice = self._table[config]
        if own_actions == actions:
            return choice
        pos = {a: i for i, a in enumerate(actions)}
        return np.array([pos[own_actions[k]] for k in choice], dtype=np.int32)

    def reachable_keys(self) -> List[StateKey]:
        """Canonical keys reachable from the initial state under any non-idling policy, sorted."""
        kernel = _kernel(self.instance, self.non_idling)
        T = self.instance.horizon
        layer = {self.root}
        keys = []
        for t in range(T + 1):
            keys.extend((t, c) for c in sorted(layer))
            nxt = set()
            for c in layer:
                if not any(code == WAITING_CODE for code in c):
                    continue
                for a in kernel.actions(c):
                    for c2, _ in kernel.after(c, a):
                        if any(code == WAITING_CODE for code in c2):
                            nxt.add(c2)
            layer = nxt
        return keys

    def export(self, fp=None) -> Optional[str]:
        """Write ``t, state, action, value`` rows for reachable non-terminal states."""
        own = fp is None
        fp = io.StringIO() if own else fp
        fp.write("t\tstate\taction\tvalue\n")
        for key in self.reachable_keys():
            jobs, value = self._lookup(key)
            fp.write(f"{key[0]}\t{format_config(key[1])}\t{','.join(map(str, jobs)) or '-'}\t{value:.12g}\n")
        return fp.getvalue() if own else None


def format_config(config: Config) -> str:
    out = []
    for c in config:
        out.append("W" if c == WAITING_CODE else "D" if c == DONE_CODE else f"S{c}")
    return ",".join(out)


def solve_optimal(instance: Instance, *, cap: float = DEFAULT_CAP, non_idling: bool = True) -> PolicyTable:
    """Optimal values and actions by backward induction from ``T_max`` down to 0.

    ``non_idling=False`` also allows matchings smaller than ``min(K, F)``.
    Raises :class:`StateSpaceError` when the estimated work exceeds ``cap``.
    """
    _check_cap(instance, cap, non_idling)
    kernel = _kernel(instance, non_idling)
    root, table, values = _backward(kernel, post_decision=non_idling)
    return PolicyTable(instance, root, table, values, non_idling)


def evaluate_policy_exact(instance: Instance, policy, *, cap: float = DEFAULT_CAP) -> float:
    """Exact expected total reward of ``policy`` from the initial state.

    ``policy(state, instance) -> Matching`` must return a feasible non-idling
    matching and depend on the state only through its canonical key (true of
    any index rule and of :class:`PolicyTable`). Objects exposing
    ``choices(config, actions)`` are evaluated without per-state calls.
    """
    _check_cap(instance, cap, True)
    kernel = _kernel(instance, True)
    if hasattr(policy, "choices"):
        choose = policy.choices
    else:
        choose = _callable_choices(instance, policy)
    root, _, values = _backward(kernel, choose)
    return float(values[root][0])


def _callable_choices(instance: Instance, policy) -> ChoiceFn:
    T = instance.horizon

    def choose(config, actions):
        pos = {a: i for i, a in enumerate(actions)}
        out = np.zeros(T + 1, dtype=np.int32)
        if len(actions) == 1:
            return out
        for t in range(T):
            state = representative_state((t, config), instance)
            if state is None:
                continue
            m = policy(state, instance)
            try:
                check_matching(state, m)
            except ValidationError as exc:
                raise InfeasibleActionError(f"policy action infeasible at {state}: {exc}", state) from exc
            out[t] = pos[m.jobs]
        return out

    return choose
