"""Buyer decision rules across the risk spectrum.

A buyer with risk parameter α tolerates a realized loss of at most 1/α.
α = 0 is risk neutral (maximizes expected utility); α = ∞ never accepts any
chance of a loss.

The constrained buyer is solved by backward induction over
(usage index, grid value, remaining loss budget).  The budget ``b`` starts at
L = 1/α.  A purchase with gain ``g = value − price`` moves it to
``min(L, b + g)``; gains beyond the starting budget are not banked, so from
every decision point onward the buyer never risks more than L.  Stopping is
allowed only with ``b ≥ 0``; a negative budget means some guaranteed future
gain must still be collected.  Budgets are rounded down onto a grid anchored
at L, which keeps the rule conservative.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .errors import DomainError, UnsupportedError
from .process import BinaryValueModel, GeneralMarkovModel, RandomWalkModel

__all__ = [
    "RiskProfile",
    "BuyerPolicy",
    "Threshold",
    "Myopic",
    "UpfrontAccept",
    "BinAcceptRule",
    "TrialThen",
    "PolicyTable",
    "bin_accept",
    "ppp_policy_constant",
    "solve_policy_backward",
    "rent_to_own_response",
    "respond",
]

_TOL = 1e-9


@dataclass(frozen=True)
class RiskProfile:
    """Risk parameter α ∈ [0, ∞]."""

    alpha: float = 0.0

    def __post_init__(self):
        a = float(self.alpha)
        if math.isnan(a) or a < 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @property
    def loss_budget(self) -> float:
        """1/α, with 1/0 = ∞ and 1/∞ = 0."""
        if self.alpha == 0.0:
            return math.inf
        if math.isinf(self.alpha):
            return 0.0
        return 1.0 / self.alpha

    @property
    def risk_neutral(self) -> bool:
        return self.alpha == 0.0

    @property
    def infinitely_averse(self) -> bool:
        return math.isinf(self.alpha)

    def to_dict(self):
        return {"alpha": "inf" if self.infinitely_averse else self.alpha}


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

class BuyerPolicy:
    """Vectorized buy/stop rule.

    ``buys(t, values, price, budget)`` returns a boolean array; ``values`` are
    the current (positive) values of the still-active buyers at usage ``t``.
    Policies that track a loss budget expose integer budget states through
    ``initial_budget`` and ``next_budget``.
    """

    tracks_budget = False

    def buys(self, t, values, price, budget=None):
        raise NotImplementedError

    def initial_budget(self, n):
        return None

    def next_budget(self, budget, values, price):
        return budget


@dataclass(frozen=True)
class Threshold(BuyerPolicy):
    """Buy while the value is strictly above ``level``."""

    level: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.level <= 1.0):
            raise DomainError("threshold must lie in [0, 1]")

    def buys(self, t, values, price, budget=None):
        return np.asarray(values) > self.level + _TOL


@dataclass(frozen=True)
class Myopic(BuyerPolicy):
    """Buy iff the current value covers the current price."""

    def buys(self, t, values, price, budget=None):
        return np.asarray(values) >= price - _TOL


@dataclass(frozen=True)
class BinAcceptRule:
    """Picklable wrapper around :func:`bin_accept`."""

    profile: RiskProfile
    price: float
    model: object

    def __call__(self, values):
        return bin_accept(self.profile, values, self.price, self.model)


@dataclass(frozen=True)
class UpfrontAccept(BuyerPolicy):
    """One payment at usage ``pay_time``; free usage otherwise.

    The buyer uses the good while it has value, and at ``pay_time`` buys iff
    ``accept(value)``.
    """

    pay_time: int
    accept: BinAcceptRule

    def buys(self, t, values, price, budget=None):
        values = np.asarray(values)
        if t == self.pay_time:
            return np.asarray(self.accept(values), dtype=bool) & (values > 0)
        return values > 0


@dataclass(frozen=True)
class TrialThen(BuyerPolicy):
    """Use freely for ``trial_length`` usages, then follow ``after``."""

    trial_length: int
    after: BuyerPolicy

    def buys(self, t, values, price, budget=None):
        if t <= self.trial_length:
            return np.asarray(values) > 0
        return self.after.buys(t, values, price, budget)


@dataclass(frozen=True, eq=False)
class PolicyTable(BuyerPolicy):
    """Decisions from backward induction.

    ``decisions[t − 1, i, k]`` is the choice at usage ``t`` with value ``i·δ``
    and budget ``L − k·h``.  Beyond the horizon the buyer keeps buying while
    the value exceeds ``tail_level``; with ``tail_level=None`` the buyer stops.
    """

    delta: float
    horizon: int
    loss_budget: float
    budget_step: float
    decisions: np.ndarray = field(repr=False)
    tail_level: float | None = None

    @property
    def n(self) -> int:
        return round(1.0 / self.delta)

    @property
    def levels(self) -> int:
        return self.decisions.shape[2]

    @property
    def tracks_budget(self):
        return self.levels > 1

    def budget_value(self, k):
        return self.loss_budget - np.asarray(k) * self.budget_step

    def initial_budget(self, n):
        return np.zeros(n, dtype=np.int64) if self.tracks_budget else None

    def next_budget(self, budget, values, price):
        if not self.tracks_budget:
            return budget
        gain = np.asarray(values) - price
        return _budget_index(self.budget_value(budget) + gain, self.loss_budget,
                             self.budget_step, self.levels)

    def buys(self, t, values, price, budget=None):
        values = np.asarray(values)
        if t > self.horizon:
            if self.tail_level is None:
                return np.zeros(values.shape, dtype=bool)
            return values > self.tail_level + _TOL
        i = np.rint(values * self.n).astype(np.int64)
        k = np.zeros_like(i) if budget is None else np.minimum(budget, self.levels - 1)
        return self.decisions[t - 1, i, k]

    def decision(self, t, value, budget_index=0) -> bool:
        return bool(self.buys(t, np.array([value]), None,
                              np.array([budget_index]) if self.tracks_budget else None)[0])


def _budget_index(b, L, h, levels):
    """Index of the largest grid budget ≤ b (grid L, L − h, ...); ``levels``
    marks budgets below the grid."""
    b = np.minimum(np.asarray(b, dtype=float), L)
    k = np.ceil((L - b) / h - 1e-9).astype(np.int64)
    return np.clip(k, 0, levels)


# ---------------------------------------------------------------------------
# acceptance and policy construction
# ---------------------------------------------------------------------------

def bin_accept(profile: RiskProfile, v0, price: float, model):
    """Whether a buyer with initial value ``v0`` pays the one-time ``price``.

    Risk neutral: the expected cumulative value covers the price.  Infinitely
    averse: the worst-case cumulative value covers it.  In between both
    conditions apply, the second relaxed by the loss budget.  Ties accept.
    """
    if price < 0:
        raise DomainError("price must be nonnegative")
    v0 = np.asarray(v0, dtype=float)
    if isinstance(model, RandomWalkModel):
        expected = analytics.cumulative_value(np.clip(v0, 0.0, 1.0), model.delta)
        worst = analytics.worst_case_cumulative(np.clip(v0, 0.0, 1.0), model.delta)
    elif isinstance(model, BinaryValueModel):
        expected = v0 * np.asarray(model.expected_stop(v0), dtype=float)
        worst = v0 * np.asarray(model.min_stop(v0), dtype=float)
    else:
        raise UnsupportedError(f"no acceptance rule for {type(model).__name__}")
    tol = _TOL * max(1.0, price)
    ok_mean = np.asarray(expected) >= price - tol
    if profile.risk_neutral:
        out = ok_mean
    elif profile.infinitely_averse:
        out = np.asarray(worst) >= price - tol
    else:
        out = ok_mean & (price <= np.asarray(worst) + profile.loss_budget + tol)
    out = out & (v0 > 0) if price > 0 else out
    return bool(out) if out.ndim == 0 else out


def ppp_policy_constant(profile: RiskProfile, price: float, model, **dp_kwargs) -> BuyerPolicy:
    """Response to a constant per-usage price."""
    if isinstance(model, BinaryValueModel):
        return Myopic()
    if profile.infinitely_averse:
        return Myopic()
    if isinstance(model, GeneralMarkovModel):
        if profile.risk_neutral:
            return Threshold(analytics.rn_threshold(price))
        raise UnsupportedError("constrained buyers are solved on the ±δ grid only")
    if profile.risk_neutral:
        return Threshold(min(1.0, analytics.rn_grid_threshold(price, model.delta)))
    from .schemes import ConstantPPP
    return solve_policy_backward(ConstantPPP(price), profile, model, **dp_kwargs)


def _guaranteed_gain(prices, n, horizon):
    """Largest gain the buyer can lock in against the worst path, per state."""
    x = np.arange(n + 1) / n
    g_next = np.zeros(n + 1)
    best = 0.0
    for t in range(horizon, 0, -1):
        down = np.concatenate([[0.0], g_next[:-1]])
        up = np.concatenate([g_next[1:], [np.inf]])
        worst = np.minimum(down, up)
        worst[n] = g_next[n - 1]
        worst[1] = 0.0  # a step down from δ is absorbed
        g = np.maximum(0.0, x - prices[t - 1] + worst)
        g[0] = 0.0
        best = max(best, float(g.max()))
        g_next = g
    return best


def _stationary_value(model: RandomWalkModel, price: float) -> np.ndarray:
    """Optimal expected utility on the grid under a constant price forever.

    The best stationary rule buys while the value exceeds some grid level w,
    so the value is max(0, max_w C(v, w) − price·h_vw).
    """
    g = model.grid
    v, w = np.meshgrid(g, g, indexing="ij")
    ok = w < v - _TOL
    ws = np.where(ok, w, v)
    util = analytics.cumulative_value_to(v, ws, model.delta) \
        - price * analytics.reflected_hit_time(v, ws, model.delta)
    best = np.max(np.where(ok, util, 0.0), axis=1)
    best = np.maximum(best, 0.0)
    best[0] = 0.0
    return best


def solve_policy_backward(scheme, profile: RiskProfile, model: RandomWalkModel,
                          horizon: int | None = None, budget_step: float | None = None
                          ) -> PolicyTable:
    """Backward induction for a buyer facing ``scheme`` on the ±δ walk.

    Parameters
    ----------
    scheme : PricingScheme
        Anything with ``price_at(t)``.
    profile : RiskProfile
    model : RandomWalkModel
    horizon : int, optional
        Number of usages considered; default ⌈10/δ²⌉.  For an unconstrained
        buyer the continuation after the horizon is the exact value of the
        best stationary response to the price ``price_at(H + 1)``, held
        constant from then on.  A constrained buyer stops at the horizon.
    budget_step : float, optional
        Budget grid spacing.  Default ``min(δ/2, L)`` (``δ/2`` when L = 0).

    Returns
    -------
    PolicyTable
    """
    if not isinstance(model, RandomWalkModel):
        raise UnsupportedError("backward induction runs on the ±δ grid")
    n = model.n
    delta = model.delta
    H = int(horizon) if horizon is not None else math.ceil(10.0 / delta ** 2 - 1e-9)
    if H < 1:
        raise DomainError("horizon must be at least 1")
    prices = np.array([scheme.price_at(t) for t in range(1, H + 1)], dtype=float)
    if np.any(prices < 0) or np.any(~np.isfinite(prices)):
        raise DomainError("prices must be finite and nonnegative")
    x = np.arange(n + 1) / n
    L = profile.loss_budget

    if math.isinf(L):
        decisions = np.zeros((H, n + 1, 1), dtype=bool)
        tail = float(scheme.price_at(H + 1))
        w_next = _stationary_value(model, tail)
        for t in range(H, 0, -1):
            down = np.concatenate([[0.0], w_next[:-1]])
            up = np.concatenate([w_next[1:], [0.0]])
            cont = 0.5 * (down + up)
            cont[n] = w_next[n - 1]
            buy = x - prices[t - 1] + cont
            buy[0] = -np.inf
            take = buy >= -_TOL
            decisions[t - 1, :, 0] = take
            w_next = np.where(take, buy, 0.0)
            w_next[0] = 0.0
        return PolicyTable(delta, H, L, 0.0, decisions,
                           tail_level=analytics.rn_grid_threshold(tail, delta))

    h = float(budget_step) if budget_step is not None else (min(delta / 2, L) if L > 0 else delta / 2)
    if h <= 0:
        raise DomainError("budget step must be positive")
    if h > delta:
        warnings.warn(f"budget step {h} is coarser than the value step {delta}", stacklevel=2)
    G = _guaranteed_gain(prices, n, H)
    K = int(math.floor((L + G) / h + 1e-9)) + 1
    b = L - np.arange(K) * h
    stop_ok = b >= -_TOL
    neg_inf = -np.inf

    decisions = np.zeros((H, n + 1, K), dtype=bool)
    terminal = np.where(stop_ok, 0.0, neg_inf)
    w_next = np.tile(terminal, (n + 1, 1))  # shape (n+1, K)
    absorbed = terminal  # value once the walk hits 0: no further choices
    for t in range(H, 0, -1):
        gain = x - prices[t - 1]                         # (n+1,)
        kk = _budget_index(b[None, :] + gain[:, None], L, h, K)  # (n+1, K)
        valid = kk < K
        kc = np.minimum(kk, K - 1)
        # continuation for each (i, k): average over the successor values
        cont = np.full((n + 1, K), neg_inf)
        for i in range(1, n + 1):
            if i == n:
                c = w_next[n - 1, kc[i]]
            else:
                lo = absorbed[kc[i]] if i == 1 else w_next[i - 1, kc[i]]
                hi = w_next[i + 1, kc[i]]
                with np.errstate(invalid="ignore"):
                    c = 0.5 * (lo + hi)
            cont[i] = np.where(valid[i], c, neg_inf)
        with np.errstate(invalid="ignore"):
            buy = gain[:, None] + cont
        buy[0] = neg_inf
        stop = np.where(stop_ok, 0.0, neg_inf)[None, :]
        take = (buy >= stop - _TOL) & np.isfinite(buy)
        decisions[t - 1] = take
        w = np.where(take, buy, stop)
        w[0] = absorbed
        w_next = w
    return PolicyTable(delta, H, L, h, decisions)


def rent_to_own_response(profile: RiskProfile, scheme, model, **dp_kwargs) -> BuyerPolicy:
    """Response to a rent-to-own offer.

    When the total the buyer can ever pay, ``price·paid_rounds``, exceeds the
    loss budget by at most one price, buying until the value is exhausted is
    both safe and (for prices ≤ ½) expectation-optimal.  Otherwise the
    constrained program is solved.
    """
    if scheme.price > 0.5 + _TOL:
        raise UnsupportedError("rent-to-own response needs a price of at most 1/2")
    if scheme.paid_rounds is None:
        return ppp_policy_constant(profile, scheme.price, model, **dp_kwargs)
    if isinstance(model, BinaryValueModel):
        raise UnsupportedError("rent-to-own is analysed on the random walk")
    total = scheme.price * scheme.paid_rounds
    if profile.risk_neutral or total <= profile.loss_budget + scheme.price + _TOL:
        return Threshold(0.0)
    return solve_policy_backward(scheme, profile, model, **dp_kwargs)


def respond(scheme, profile: RiskProfile, model, **dp_kwargs) -> BuyerPolicy:
    """Build the buyer's policy for ``scheme`` once, before simulation."""
    from . import schemes as S

    if isinstance(scheme, S.BuyItNow):
        return UpfrontAccept(1, BinAcceptRule(profile, scheme.price, model))
    if isinstance(scheme, S.FreeTrialBIN):
        return UpfrontAccept(scheme.trial_length + 1, BinAcceptRule(profile, scheme.price, model))
    if isinstance(scheme, S.ConstantPPP):
        return ppp_policy_constant(profile, scheme.price, model, **dp_kwargs)
    if isinstance(scheme, S.FreeTrialPPP):
        if isinstance(model, BinaryValueModel) or profile.infinitely_averse:
            return Myopic()
        if profile.risk_neutral:
            return TrialThen(scheme.trial_length,
                             ppp_policy_constant(profile, scheme.price, model))
        return solve_policy_backward(scheme, profile, model, **dp_kwargs)
    if isinstance(scheme, S.RentToOwn):
        return rent_to_own_response(profile, scheme, model, **dp_kwargs)
    if isinstance(scheme, S.PriceSequence):
        if isinstance(model, RandomWalkModel):
            return solve_policy_backward(scheme, profile, model, **dp_kwargs)
        raise UnsupportedError("price sequences are solved on the ±δ grid only")
    raise UnsupportedError(f"unknown scheme {scheme!r}")
