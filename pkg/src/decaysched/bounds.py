"""Approximation-ratio quantities: E[sigma_max], Delta, its geometric upper bound, and decay time-scale."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import Instance, ServiceDist

SERIES_TOL = 1e-12
_CHUNK = 4096


def expected_sigma_max_exact(dists: Sequence[ServiceDist], tol: float = SERIES_TOL,
                             full_output: bool = False):
    """``E[max_j sigma_j] = sum_{x>=0} (1 - prod_j P(sigma_j <= x))`` for independent jobs.

    Finite supports are summed exactly. With geometric jobs the series is cut
    once the tail bound ``sum_j (1-p_j)^x / p_j`` drops below ``tol``; with
    ``full_output=True`` the pair ``(value, tail_bound)`` is returned.
    """
    dists = list(dists)
    if not dists:
        raise ValueError("need at least one distribution")
    geo_q = np.array([1.0 - d.p for d in dists if d.is_geometric])
    geo_p = 1.0 - geo_q
    s_fin = max((d.s_max for d in dists if not d.is_geometric), default=0)

    total = 0.0
    x0 = 0
    while True:
        x = np.arange(x0, x0 + _CHUNK)
        cdf = np.ones(len(x))
        for d in dists:
            cdf = cdf * d.cdf(x)
        total += math.fsum(1.0 - cdf)
        x0 += _CHUNK
        if geo_q.size == 0:
            if x0 > s_fin:
                err = 0.0
                break
            continue
        err = float(np.sum(geo_q ** x0 / geo_p)) if np.all(geo_q < 1) else math.inf
        if x0 > s_fin and err < tol:
            break
    return (total, err) if full_output else total


def delta_exact(instance: Instance) -> float:
    """``E[sigma_max] / min_j E[sigma_j]``."""
    dists = [job.service for job in instance.jobs]
    return expected_sigma_max_exact(dists) / min(d.mean for d in dists)


def delta_ub_appendix(p_min: float, p_max: float, n_jobs: int, tol: float = SERIES_TOL,
                      full_output: bool = False):
    """Upper bound on Delta for geometric jobs with rates in ``[p_min, p_max]``.

    ``p_max * sum_{x>=0} [1 - (1 - (1 - p_min)^x)^J]``, summed until the tail
    bound ``J (1-p_min)^x / p_min`` is below ``tol``.
    """
    if not p_min > 0:
        raise ValueError("p_min must be positive; the series diverges at p_min = 0")
    if not p_min <= p_max <= 1:
        raise ValueError("need 0 < p_min <= p_max <= 1")
    if n_jobs < 1:
        raise ValueError("need at least one job")
    q = 1.0 - p_min
    total = 0.0
    x0 = 0
    while True:
        x = np.arange(x0, x0 + _CHUNK)
        with np.errstate(divide="ignore"):  # x = 0 gives log(0) = -inf, term 1
            terms = -np.expm1(n_jobs * np.log1p(-(q ** x))) if q > 0 else (x == 0).astype(float)
        total += math.fsum(terms)
        x0 += _CHUNK
        err = n_jobs * q ** x0 / p_min
        if err < tol:
            break
    return (p_max * total, p_max * err) if full_output else p_max * total


def decay_timescale(instance: Instance, last_slot: Optional[int] = None) -> float:
    """``max_{t, k, m} E[w_k(t) - w_k(t + sigma_m)]`` over ``t = 0..last_slot`` (default ``T_max``)."""
    T = instance.horizon
    last = T if last_slot is None else int(last_slot)
    if not 0 <= last <= T:
        raise ValueError("last_slot must lie in 0..horizon")
    best = 0.0
    for k in instance.jobs:
        w = np.zeros(T + 1)
        h = k.reward.horizon
        w[: h + 1] = k.reward.values
        for m in {job.service for job in instance.jobs}:
            shifted = _shifted_expectation(w, m, T)
            best = max(best, float(np.max(w[: last + 1] - shifted[: last + 1])))
    return max(best, 0.0)


def _shifted_expectation(w: np.ndarray, dist: ServiceDist, T: int) -> np.ndarray:
    """``E[w(t + sigma)]`` for ``t = 0..T`` with ``w`` zero after ``T``."""
    out = np.zeros(T + 2)
    if dist.is_geometric:
        wp = np.append(w, 0.0)
        for t in range(T, -1, -1):
            out[t] = dist.p * wp[t + 1] + (1.0 - dist.p) * out[t + 1]
        return out[: T + 1]
    mass = dist.mass
    wp = np.concatenate([w, np.zeros(len(mass) + 1)])
    res = np.zeros(T + 1)
    for s in np.flatnonzero(mass):
        res += mass[s] * wp[s: s + T + 1]
    return res


BOUND_COLUMNS = (
    "n_jobs", "n_processors", "horizon", "e_sigma_max", "min_mean_service", "delta",
    "delta_ub", "decay_timescale", "opt_value", "greedy_value", "ratio",
    "bound_2_plus_delta", "iid", "within_2_plus_delta", "within_2",
)


@dataclass(frozen=True)
class BoundReport:
    n_jobs: int
    n_processors: int
    horizon: int
    e_sigma_max: float
    min_mean_service: float
    delta: float
    delta_ub: Optional[float]
    decay_timescale: float
    opt_value: float
    greedy_value: float
    ratio: float
    bound_2_plus_delta: float
    iid: bool
    within_2_plus_delta: bool
    within_2: Optional[bool]

    def csv_row(self) -> list:
        out = []
        for name in BOUND_COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append(str(v).lower())
            elif isinstance(v, float):
                out.append(f"{v:.9g}")
            else:
                out.append(str(v))
        return out

    def as_dict(self) -> dict:
        return asdict(self)


def value_ratio(opt: float, greedy: float) -> float:
    """``opt / greedy``; 1 when both are zero (every policy then earns nothing)."""
    if greedy > 0:
        return opt / greedy
    return 1.0 if opt <= 0 else math.inf


def check_bounds(instance: Instance, tol: float = 1e-9, **solve_kw) -> BoundReport:
    """Solve optimal and greedy values exactly and test them against ``2 + Delta`` (and 2 when service is IID)."""
    from .dp import evaluate_policy_exact, solve_optimal
    from .greedy import GreedyPolicy

    dists = [job.service for job in instance.jobs]
    esm = expected_sigma_max_exact(dists)
    mmin = min(d.mean for d in dists)
    delta = esm / mmin
    delta_ub = None
    if all(d.is_geometric for d in dists):
        ps = [d.p for d in dists]
        delta_ub = delta_ub_appendix(min(ps), max(ps), len(ps))
    opt = solve_optimal(instance, **solve_kw).value0
    greedy = evaluate_policy_exact(instance, GreedyPolicy(instance), **solve_kw)
    ratio = value_ratio(opt, greedy)
    iid = len(set(dists)) == 1
    bound = 2.0 + delta
    return BoundReport(
        n_jobs=instance.n_jobs,
        n_processors=instance.n_processors,
        horizon=instance.horizon,
        e_sigma_max=esm,
        min_mean_service=mmin,
        delta=delta,
        delta_ub=delta_ub,
        decay_timescale=decay_timescale(instance),
        opt_value=opt,
        greedy_value=greedy,
        ratio=ratio,
        bound_2_plus_delta=bound,
        iid=iid,
        within_2_plus_delta=bool(opt <= bound * greedy * (1 + tol) + tol),
        within_2=bool(opt <= 2.0 * greedy * (1 + tol) + tol) if iid else None,
    )
