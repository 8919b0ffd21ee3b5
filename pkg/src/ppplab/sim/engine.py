"""Vectorized Monte Carlo engine for buyer trajectories.

Replicas are processed in fixed-size chunks.  Chunk ``c`` draws every random
number (initial values and path steps) from its own generator seeded by
``SeedSequence([master_seed, c])``, and chunk results are concatenated in
chunk order, so an estimate depends only on ``(config, master_seed, n)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..process import default_cap
from ..strategy import RiskProfile, respond

__all__ = [
    "OutcomeMetrics",
    "OutcomeBatch",
    "EstimateResult",
    "SimulationSummary",
    "simulate_batch",
    "simulate_once",
    "estimate",
    "chunk_rng",
    "CHUNK",
]

CHUNK = 1 << 15
_Z99 = 2.5758293035489004


@dataclass
class OutcomeMetrics:
    """Result of one buyer trajectory."""

    revenue: float
    welfare: float
    utility: float
    stop_time: int
    post_trial_duration: int
    max_drawdown: float
    capped: bool


@dataclass
class OutcomeBatch:
    """Per-replica outcome arrays."""

    revenue: np.ndarray
    welfare: np.ndarray
    stop_time: np.ndarray
    post_trial_duration: np.ndarray
    max_drawdown: np.ndarray
    capped: np.ndarray

    @property
    def utility(self) -> np.ndarray:
        return self.welfare - self.revenue

    def __len__(self):
        return len(self.revenue)

    def row(self, i) -> OutcomeMetrics:
        return OutcomeMetrics(float(self.revenue[i]), float(self.welfare[i]),
                              float(self.welfare[i] - self.revenue[i]),
                              int(self.stop_time[i]), int(self.post_trial_duration[i]),
                              float(self.max_drawdown[i]), bool(self.capped[i]))

    @staticmethod
    def concat(parts):
        return OutcomeBatch(*(np.concatenate([getattr(p, f) for p in parts])
                              for f in ("revenue", "welfare", "stop_time",
                                        "post_trial_duration", "max_drawdown", "capped")))


def _caps_for(model, v0, cap):
    if cap is None:
        ev = np.asarray(model.expected_stop(np.clip(v0, 0.0, 1.0)), dtype=float)
        return np.maximum(1, 50 * np.ceil(ev - 1e-9)).astype(np.int64)
    cap = np.broadcast_to(np.asarray(cap, dtype=np.int64), np.shape(v0)).copy()
    if np.any(cap < 1):
        raise DomainError("cap must be at least 1")
    return cap


def simulate_batch(scheme, policy, model, v0, rng: np.random.Generator,
                   cap=None) -> OutcomeBatch:
    """Simulate one buyer per entry of ``v0``.

    At usage t = 1, 2, ... every active buyer whose value is positive asks
    ``policy`` whether to buy at ``scheme.price_at(t)``.  A buyer who declines
    is gone for good.  After a purchase the value moves one step.

    Parameters
    ----------
    scheme : PricingScheme
    policy : BuyerPolicy
    model : value process with the batch interface
    v0 : array_like
        Initial values.
    rng : numpy.random.Generator
    cap : int or array_like, optional
        Usage cap per replica; default 50·⌈E[T]⌉ at the starting state.
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    n = len(v0)
    state = model.batch_init(v0, rng)
    # caps follow the starting state (after any snapping onto the grid)
    caps = _caps_for(model, state.values_at(np.arange(n)), cap)
    revenue = np.zeros(n)
    welfare = np.zeros(n)
    net = np.zeros(n)
    peak = np.zeros(n)
    drawdown = np.zeros(n)
    stop_time = np.zeros(n, dtype=np.int64)
    post = np.zeros(n, dtype=np.int64)
    capped = np.zeros(n, dtype=bool)
    budget = policy.initial_budget(n) if policy.tracks_budget else None
    trial = int(getattr(scheme, "trial_length", 0) or 0)

    active = np.flatnonzero(state.values_at(np.arange(n)) > 0)
    t = 0
    while active.size:
        t += 1
        vals = state.values_at(active)
        price = scheme.price_at(t)
        buy = np.asarray(policy.buys(t, vals, price,
                                     None if budget is None else budget[active]), dtype=bool)
        rows = active[buy]
        vals = vals[buy]
        revenue[rows] += price
        worth = np.minimum(vals, 1.0)
        welfare[rows] += worth
        net[rows] += worth - price
        peak[rows] = np.maximum(peak[rows], net[rows])
        drawdown[rows] = np.maximum(drawdown[rows], peak[rows] - net[rows])
        stop_time[rows] = t
        if t > trial:
            post[rows] += 1
        if budget is not None:
            budget[rows] = policy.next_budget(budget[rows], vals, price)
        hit_cap = stop_time[rows] >= caps[rows]
        capped[rows[hit_cap]] = True
        rows = rows[~hit_cap]
        if rows.size == 0:
            break
        absorbed = model.batch_advance(state, rows, rng)
        active = rows[~absorbed]
    return OutcomeBatch(revenue, welfare, stop_time, post, drawdown, capped)


def simulate_once(scheme, policy, model, v0: float, rng: np.random.Generator,
                  cap: int | None = None) -> OutcomeMetrics:
    """Simulate a single buyer with initial value ``v0``."""
    if cap is None:
        cap = default_cap(model, min(max(v0, 0.0), 1.0))
    return simulate_batch(scheme, policy, model, [v0], rng, cap).row(0)


@dataclass
class EstimateResult:
    """Sample mean with standard error and a 99% normal interval."""

    mean: float
    std_err: float
    n_samples: int
    capped_fraction: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_samples(cls, x, capped_fraction=0.0):
        x = np.asarray(x, dtype=float)
        n = len(x)
        mean = float(np.mean(x))
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean, se, n, float(capped_fraction), mean - _Z99 * se, mean + _Z99 * se)

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def to_dict(self):
        return {"mean": self.mean, "std_err": self.std_err, "n_samples": self.n_samples,
                "capped_fraction": self.capped_fraction,
                "ci99": [self.ci_low, self.ci_high]}


@dataclass
class SimulationSummary:
    """Estimates of every outcome metric for one (scheme, profile) pair."""

    revenue: EstimateResult
    welfare: EstimateResult
    utility: EstimateResult
    stop_time: EstimateResult
    post_trial_duration: EstimateResult
    max_drawdown: float
    max_loss: float
    min_utility: float
    capped_fraction: float
    n_samples: int
    seed: int
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "revenue": self.revenue.to_dict(),
            "welfare": self.welfare.to_dict(),
            "utility": self.utility.to_dict(),
            "stop_time": self.stop_time.to_dict(),
            "post_trial_duration": self.post_trial_duration.to_dict(),
            "max_drawdown": self.max_drawdown,
            "max_loss": self.max_loss,
            "min_utility": self.min_utility,
            "capped_fraction": self.capped_fraction,
            "n": self.n_samples,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }


def chunk_rng(master_seed: int, chunk: int) -> np.random.Generator:
    """Generator for chunk ``chunk`` of a run seeded with ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(chunk)]))


def _run_chunk(args):
    scheme, policy, model, F, v0_fixed, size, seed, chunk, cap = args
    rng = chunk_rng(seed, chunk)
    if v0_fixed is None:
        v0 = F.sample(rng, size)
    else:
        v0 = np.full(size, float(v0_fixed))
    return simulate_batch(scheme, policy, model, v0, rng, cap)


def run_outcomes(scheme, policy, model, F, n_samples: int, master_seed: int,
                 v0: float | None = None, cap=None, workers: int = 1) -> OutcomeBatch:
    """Outcome arrays for ``n_samples`` replicas, chunked and seeded."""
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    jobs = [(scheme, policy, model, F, v0, s, master_seed, c, cap)
            for c, s in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return OutcomeBatch.concat(parts)


def summarize(out: OutcomeBatch, master_seed: int) -> SimulationSummary:
    cf = float(np.mean(out.capped))
    notes = []
    if cf > 1e-2:
        msg = f"{cf:.2%} of trajectories hit the usage cap; estimates are truncated"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    util = out.utility
    return SimulationSummary(
        revenue=EstimateResult.from_samples(out.revenue, cf),
        welfare=EstimateResult.from_samples(out.welfare, cf),
        utility=EstimateResult.from_samples(util, cf),
        stop_time=EstimateResult.from_samples(out.stop_time, cf),
        post_trial_duration=EstimateResult.from_samples(out.post_trial_duration, cf),
        max_drawdown=float(np.max(out.max_drawdown)),
        max_loss=float(max(0.0, -np.min(util))),
        min_utility=float(np.min(util)),
        capped_fraction=cf,
        n_samples=len(out),
        seed=int(master_seed),
        warnings=notes,
    )


def estimate(scheme, profile: RiskProfile, model, F, n_samples: int, master_seed: int,
             policy=None, v0: float | None = None, cap=None, workers: int = 1,
             **policy_kwargs) -> SimulationSummary:
    """Monte Carlo estimate of every outcome metric.

    Parameters
    ----------
    scheme : PricingScheme
    profile : RiskProfile
    model : value process
    F : ValueDistribution
        Law of V0; ignored when ``v0`` is given.
    n_samples : int
        At least 1000.
    master_seed : int
    policy : BuyerPolicy, optional
        Defaults to :func:`ppplab.strategy.respond`, built once.
    v0 : float, optional
        Fixed initial value for every replica.
    cap : int, optional
        Usage cap per replica.
    workers : int
        Worker processes; results do not depend on it.
    """
    if n_samples < 1000:
        raise DomainError("n_samples must be at least 1000")
    if master_seed is None:
        raise DomainError("a master seed is required")
    if policy is None:
        policy = respond(scheme, profile, model, **policy_kwargs)
    out = run_outcomes(scheme, policy, model, F, n_samples, master_seed, v0, cap, workers)
    return summarize(out, master_seed)
