"""Statistical checks: hitting-time tails, free-trial revenue floors and the
moment statistics of the general martingale walk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import analytics
from ..errors import DomainError
from ..process import GeneralMarkovModel, RandomWalkModel
from ..schemes import ConstantPPP, recommended_free_trial_bin, recommended_free_trial_ppp
from ..strategy import RiskProfile, Threshold, respond
from .engine import EstimateResult, simulate_batch

__all__ = [
    "TailCheck",
    "tail_probability_check",
    "FreeTrialCheck",
    "free_trial_bounds_check",
    "measure_general_walk",
]

_TOL = 1e-9


@dataclass
class TailCheck:
    empirical: float
    bound: float
    std_err: float
    passed: bool

    def to_dict(self):
        return dict(empirical=self.empirical, bound=self.bound, std_err=self.std_err,
                    passed=self.passed)


def tail_probability_check(v: float, params, k: int, n_samples: int,
                           rng: np.random.Generator) -> TailCheck:
    """Compare P[h_{v,0} ≥ k·E h_{v,0}] with 2^{−⌊k/2⌋}.

    Passes when the empirical frequency is at most the bound plus three
    binomial standard errors.
    """
    if k < 2 or int(k) != k:
        raise DomainError("k must be an integer of at least 2")
    model = params if isinstance(params, RandomWalkModel) else RandomWalkModel(float(params))
    model.index_of(v)
    mean_h = analytics.absorption_time(v, model.delta)
    level = math.ceil(k * mean_h - 1e-9)
    out = simulate_batch(ConstantPPP(0.0), Threshold(0.0), model, np.full(n_samples, v), rng,
                         cap=max(level, 1))
    hit = out.stop_time >= level
    p = float(np.mean(hit))
    bound = 2.0 ** (-(k // 2))
    se = math.sqrt(max(p * (1 - p), bound * (1 - bound)) / n_samples)
    return TailCheck(p, bound, se, p <= bound + 3 * se)


@dataclass
class FreeTrialCheck:
    empirical_revenue: float
    std_err: float
    lower_bound: float
    passed: bool

    def to_dict(self):
        return dict(empirical_revenue=self.empirical_revenue, std_err=self.std_err,
                    lower_bound=self.lower_bound, passed=self.passed)


def free_trial_bounds_check(variant: str, v: float, params, n_samples: int,
                            rng: np.random.Generator) -> FreeTrialCheck:
    """Revenue floor of the recommended free-trial schemes for a type ``v``.

    ``variant="ppp"`` pairs the PPP trial with an infinitely risk-averse
    buyer and the floor 0.00727·v/δ²; ``variant="bin"`` pairs the BIN trial
    with a risk-neutral buyer and the floor 0.00153·v/δ².
    """
    model = params if isinstance(params, RandomWalkModel) else RandomWalkModel(float(params))
    d2 = model.delta ** 2
    if variant == "ppp":
        scheme = recommended_free_trial_ppp(model)
        profile = RiskProfile(math.inf)
        coef = analytics.lower_bound_ppp_free_trial(scheme.price)
    elif variant == "bin":
        scheme = recommended_free_trial_bin(model)
        profile = RiskProfile(0.0)
        coef = analytics.lower_bound_bin_free_trial()
    else:
        raise DomainError(f"variant must be 'ppp' or 'bin', got {variant!r}")
    bound = coef * v / d2
    if v <= 0:
        return FreeTrialCheck(0.0, 0.0, 0.0, True)
    policy = respond(scheme, profile, model)
    out = simulate_batch(scheme, policy, model, np.full(n_samples, v), rng)
    est = EstimateResult.from_samples(out.revenue)
    return FreeTrialCheck(est.mean, est.std_err, bound, est.mean >= bound - 3 * est.std_err)


def measure_general_walk(model: GeneralMarkovModel, v: float, n_samples: int,
                         rng: np.random.Generator, x: float = 0.5,
                         cap: int | None = None) -> dict:
    """Path statistics of the general walk started at ``v``.

    Returns a mapping from statistic name to ``(mean, std_err, n)``:

    ``hit_one``
        indicator that the walk reaches ≥ 1 before ≤ 0;
    ``exit_time``
        τ, the first time the value is ≥ 1 or ≤ 0;
    ``time_to_one``
        τ on the event that the walk reaches ≥ 1 first;
    ``return_time``
        on the same event, the time from τ + 1 until the value first drops to
        ``x`` or below;
    ``cumulative_value``
        sum of min(V_t, 1) until absorption.
    """
    if not (0.0 < v < 1.0):
        raise DomainError("start value must lie in (0, 1)")
    if cap is None:
        cap = 100 * math.ceil(float(model.expected_stop(v)))
    n = int(n_samples)
    cur = np.full(n, float(v))
    prev = cur.copy()
    cv = np.zeros(n)
    tau = np.full(n, -1, dtype=np.int64)
    hit = np.zeros(n, dtype=bool)
    ret = np.full(n, -1, dtype=np.int64)
    alive = np.arange(n)
    t = 0
    while alive.size and t < cap:
        cv[alive] += np.minimum(cur[alive], 1.0)
        inc = model.sample_increments(rng, alive.size)
        nxt = model.next_value(prev[alive], cur[alive], inc)
        prev[alive] = cur[alive]
        cur[alive] = nxt
        t += 1
        # first exit from (0, 1)
        fresh = alive[(tau[alive] < 0) & ((nxt >= 1.0 - _TOL) | (nxt <= 0.0))]
        tau[fresh] = t
        hit[fresh] = cur[fresh] >= 1.0 - _TOL
        # return to ≤ x after the step following a hit
        pending = alive[hit[alive] & (ret[alive] < 0) & (t >= tau[alive] + 1)]
        done = pending[cur[pending] <= x + _TOL]
        ret[done] = t - (tau[done] + 1)
        alive = alive[nxt > 0.0]

    def stat(arr):
        arr = np.asarray(arr, dtype=float)
        if arr.size == 0:
            return (math.nan, math.nan, 0)
        se = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.inf
        return (float(np.mean(arr)), se, int(arr.size))

    exited = tau >= 0
    return {
        "hit_one": stat(hit[exited]),
        "exit_time": stat(tau[exited]),
        "time_to_one": stat(tau[hit]),
        "return_time": stat(ret[hit & (ret >= 0)]),
        "cumulative_value": stat(cv),
        "truncated": int(np.sum(~exited) + alive.size),
    }
