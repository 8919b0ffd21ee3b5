"""Pricing schemes, recommended parameters and revenue optimizers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import analytics
from ._search import grid_argmax
from .distributions import PointMass, ValueDistribution, monopoly_price
from .errors import DomainError, NotClosedFormError, UnsupportedError
from .process import BinaryValueModel, RandomWalkModel
from .strategy import RiskProfile, bin_accept

__all__ = [
    "BuyItNow",
    "ConstantPPP",
    "FreeTrialPPP",
    "FreeTrialBIN",
    "RentToOwn",
    "PriceSequence",
    "price_at",
    "recommended_free_trial_ppp",
    "recommended_free_trial_bin",
    "rent_to_own_params",
    "alpha_ppp_scheme",
    "BinOptimum",
    "optimal_bin",
    "optimal_constant_ppp",
    "Metrics",
    "DominanceReport",
    "bcm_dominating_price",
    "closed_form_metrics",
    "closed_form_revenue",
]


def _check_price(p):
    if not (np.isfinite(p) and p >= 0):
        raise DomainError(f"price must be finite and nonnegative, got {p}")


def _check_count(k, name):
    if int(k) != k or k < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {k}")


@dataclass(frozen=True)
class BuyItNow:
    """One payment at the first usage, free afterwards."""

    price: float
    kind = "bin"
    trial_length = 0

    def __post_init__(self):
        _check_price(self.price)

    def price_at(self, t: int) -> float:
        return float(self.price) if t == 1 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "price": self.price}


@dataclass(frozen=True)
class ConstantPPP:
    """The same price at every usage."""

    price: float
    kind = "ppp"
    trial_length = 0

    def __post_init__(self):
        _check_price(self.price)

    def price_at(self, t: int) -> float:
        return float(self.price)

    def to_dict(self):
        return {"kind": self.kind, "price": self.price}


@dataclass(frozen=True)
class FreeTrialPPP:
    """``trial_length`` free usages, then ``price`` per usage."""

    trial_length: int
    price: float
    kind = "free_ppp"

    def __post_init__(self):
        _check_count(self.trial_length, "trial_length")
        _check_price(self.price)

    def price_at(self, t: int) -> float:
        return 0.0 if t <= self.trial_length else float(self.price)

    def to_dict(self):
        return {"kind": self.kind, "trial_length": self.trial_length, "price": self.price}


@dataclass(frozen=True)
class FreeTrialBIN:
    """``trial_length`` free usages, then a one-time ``price``."""

    trial_length: int
    price: float
    kind = "free_bin"

    def __post_init__(self):
        _check_count(self.trial_length, "trial_length")
        _check_price(self.price)

    def price_at(self, t: int) -> float:
        return float(self.price) if t == self.trial_length + 1 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "trial_length": self.trial_length, "price": self.price}


@dataclass(frozen=True)
class RentToOwn:
    """``price`` for the first ``paid_rounds`` usages, free afterwards.

    ``paid_rounds=None`` means the price applies forever.
    """

    price: float
    paid_rounds: int | None
    kind = "rto"
    trial_length = 0

    def __post_init__(self):
        _check_price(self.price)
        if self.paid_rounds is not None:
            _check_count(self.paid_rounds, "paid_rounds")

    def price_at(self, t: int) -> float:
        if self.paid_rounds is not None and t > self.paid_rounds:
            return 0.0
        return float(self.price)

    def to_dict(self):
        return {"kind": self.kind, "price": self.price, "paid_rounds": self.paid_rounds}


@dataclass(frozen=True)
class PriceSequence:
    """Explicit prices p_1, ..., p_k followed by ``tail_price`` forever."""

    prices: tuple
    tail_price: float = 0.0
    kind = "sequence"
    trial_length = 0

    def __post_init__(self):
        ps = tuple(float(p) for p in self.prices)
        for p in ps + (self.tail_price,):
            _check_price(p)
        object.__setattr__(self, "prices", ps)

    def price_at(self, t: int) -> float:
        return self.prices[t - 1] if t <= len(self.prices) else float(self.tail_price)

    def to_dict(self):
        return {"kind": self.kind, "prices": list(self.prices), "tail_price": self.tail_price}


def price_at(scheme, t: int) -> float:
    """Price charged at usage ``t`` (t ≥ 1)."""
    if t < 1:
        raise DomainError("usage index starts at 1")
    return scheme.price_at(int(t))


# ---------------------------------------------------------------------------
# recommended parameters
# ---------------------------------------------------------------------------

def _delta_of(params) -> float:
    return float(getattr(params, "delta", params))


def recommended_free_trial_ppp(params) -> FreeTrialPPP:
    """Trial of ⌈2/(3δ²)⌉ usages followed by price 0.089."""
    d = _delta_of(params)
    return FreeTrialPPP(math.ceil(2.0 / (3.0 * d * d) - 1e-9), 0.089)


def recommended_free_trial_bin(params) -> FreeTrialBIN:
    """Trial of ⌈3/(8δ²)⌉ usages followed by a one-time price 1/(4δ²)."""
    d = _delta_of(params)
    return FreeTrialBIN(math.ceil(3.0 / (8.0 * d * d) - 1e-9), 1.0 / (4.0 * d * d))


def rent_to_own_params(alpha: float, v_star: float, params, c: float = 24.0) -> RentToOwn:
    """Price min(½, 1/(cαC(v*))) for ⌈c·C(v*)⌉ rounds."""
    if not (0.0 < alpha < math.inf):
        raise UnsupportedError("use BIN or a constant price for alpha in {0, inf}")
    if not (0.0 < v_star <= 1.0):
        raise DomainError("v_star must lie in (0, 1]")
    cv = analytics.cumulative_value(v_star, _delta_of(params))
    price = min(0.5, 1.0 / (c * alpha * cv))
    return RentToOwn(price, math.ceil(c * cv - 1e-9))


def alpha_ppp_scheme(alpha: float, F: ValueDistribution, model: RandomWalkModel,
                     resolution: int = 10_000):
    """PPP scheme for an α-averse buyer on the walk.

    Let v* be the optimal α-BIN threshold.  If (v*)²/(2δ) is below
    √δ·min(1/α, C(v*)) the rent-to-own offer of :func:`rent_to_own_params` is
    returned.  Otherwise the constant price v*/2 is returned as a
    ``RentToOwn`` without a paid-round limit.
    """
    if alpha == 0:
        return RentToOwn(0.5, None)
    if math.isinf(alpha):
        return RentToOwn(monopoly_price(F) / 2.0, None)
    d = model.delta
    v_star = optimal_bin(F, model, RiskProfile(alpha), resolution).threshold
    if v_star <= 0:
        raise DomainError("optimal BIN sells to everyone; no threshold type")
    cv = analytics.cumulative_value(v_star, d)
    if v_star ** 2 / (2.0 * d) < math.sqrt(d) * min(1.0 / alpha, cv):
        return rent_to_own_params(alpha, v_star, d)
    return RentToOwn(v_star / 2.0, None)


# ---------------------------------------------------------------------------
# per-type closed forms and their expectations over F
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    """Expected revenue, welfare and buyer utility."""

    revenue: float
    welfare: float

    @property
    def utility(self) -> float:
        return self.welfare - self.revenue

    def to_dict(self):
        return {"revenue": self.revenue, "welfare": self.welfare, "utility": self.utility}


def _bin_price_curve(profile: RiskProfile, model):
    """Largest one-time price accepted by every type ≥ t, as a function of t."""
    if isinstance(model, RandomWalkModel):
        d = model.delta
        mean = lambda t: analytics.cumulative_value(t, d)          # noqa: E731
        worst = lambda t: analytics.worst_case_cumulative(t, d)    # noqa: E731
    elif isinstance(model, BinaryValueModel):
        mean = lambda t: t * np.asarray(model.expected_stop(t), dtype=float)  # noqa: E731
        worst = lambda t: t * np.asarray(model.min_stop(t), dtype=float)      # noqa: E731
    else:
        raise UnsupportedError(f"no BIN revenue curve for {type(model).__name__}")
    L = profile.loss_budget
    if profile.risk_neutral:
        return mean
    if profile.infinitely_averse:
        return worst
    return lambda t: np.minimum(mean(t), worst(t) + L)


def _per_type(scheme, model, profile: RiskProfile, exact_grid: bool):
    """Return (lower, revenue(v), welfare(v)) for the types that participate.

    ``lower`` is the infimum of participating values; ``None`` means the
    acceptance region must be located numerically.
    """
    if isinstance(model, BinaryValueModel):
        m = lambda v: np.asarray(model.expected_stop(v), dtype=float)  # noqa: E731
        if isinstance(scheme, ConstantPPP):
            p = scheme.price
            on = lambda v: np.asarray(v, dtype=float) >= p - 1e-12  # noqa: E731
            return p, (lambda v: np.where(on(v), p * m(v), 0.0)), \
                (lambda v: np.where(on(v), v * m(v), 0.0))
        if isinstance(scheme, BuyItNow):
            P = scheme.price
            acc = lambda v: bin_accept(profile, v, P, model)  # noqa: E731
            return None, (lambda v: np.where(acc(v), P, 0.0)), \
                (lambda v: np.where(acc(v), v * m(v), 0.0))
        raise NotClosedFormError(f"{type(scheme).__name__} on the binary model")

    if not isinstance(model, RandomWalkModel):
        raise NotClosedFormError(f"no closed forms for {type(model).__name__}")
    d = model.delta
    n = model.n
    if isinstance(scheme, ConstantPPP):
        p = scheme.price
        if profile.risk_neutral:
            w = analytics.rn_grid_threshold(p, d) if exact_grid else analytics.rn_threshold(p)
            w = min(w, 1.0)
            lower = w
            exit_level = w
        elif profile.infinitely_averse:
            lower = p
            # first value strictly below p; on the grid that is the largest grid point < p
            exit_level = (math.ceil(p * n - 1e-9) - 1) / n if exact_grid else p
            exit_level = max(exit_level, 0.0)
        else:
            raise NotClosedFormError("constant PPP for 0 < alpha < inf needs simulation")

        def rev(v):
            v = np.asarray(v, dtype=float)
            ok = v > lower + 1e-12 if profile.risk_neutral else v >= lower - 1e-12
            vv = np.where(ok, v, exit_level)
            return np.where(ok, p * analytics.reflected_hit_time(vv, exit_level + 0 * vv, d), 0.0)

        def wel(v):
            v = np.asarray(v, dtype=float)
            ok = v > lower + 1e-12 if profile.risk_neutral else v >= lower - 1e-12
            vv = np.where(ok, v, exit_level)
            return np.where(ok, analytics.cumulative_value_to(vv, exit_level + 0 * vv, d), 0.0)

        return lower, rev, wel
    if isinstance(scheme, BuyItNow):
        P = scheme.price
        acc = lambda v: bin_accept(profile, v, P, model)  # noqa: E731
        return None, (lambda v: np.where(acc(v), P, 0.0)), \
            (lambda v: np.where(acc(v), analytics.cumulative_value(np.asarray(v, float), d), 0.0))
    raise NotClosedFormError(f"{type(scheme).__name__} has no closed form; use sim.estimate")


def _acceptance_cutoff(accepts, lo=0.0, hi=1.0, iters=80):
    """Smallest v with ``accepts(v)`` for a monotone predicate on [lo, hi]."""
    if not accepts(np.array([hi]))[0]:
        return None
    if accepts(np.array([lo]))[0]:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if accepts(np.array([mid]))[0]:
            hi = mid
        else:
            lo = mid
    return hi


def _lattice_weights(F: ValueDistribution, n: int) -> np.ndarray:
    """P(randomized rounding of V0 lands on grid point i), i = 0..n."""
    x = np.arange(n + 1) / n
    pts = list(F.candidate_points())

    def int_cdf(a, b):
        inner = [p for p in pts if a < p < b]
        val, _ = integrate.quad(lambda v: float(F.cdf(v)), a, b, points=inner or None,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    Fx = np.asarray(F.cdf(x), dtype=float)
    w = np.zeros(n + 1)
    w[0] += Fx[0]
    for i in range(n):
        a, b = x[i], x[i + 1]
        # ∫_(a,b] (v − a)/δ dF = ((b − a)F(b) − ∫_a^b F)/δ
        up = ((b - a) * Fx[i + 1] - int_cdf(a, b)) * n
        w[i + 1] += up
        w[i] += (Fx[i + 1] - Fx[i]) - up
    return w


def _expect(F: ValueDistribution, fn, lower, extra_points=()):
    """E[fn(V)] over V ~ F restricted to V ≥ lower."""
    if isinstance(F, PointMass):
        return float(np.asarray(fn(np.array([F.v])))[0])
    lo = max(0.0, float(lower))
    if lo >= 1.0:
        return 0.0
    pts = sorted({p for p in tuple(F.candidate_points()) + tuple(extra_points) if lo < p < 1.0})

    def g(v):
        return float(np.asarray(fn(np.array([v])))[0]) * float(F.pdf(v))

    val, _ = integrate.quad(g, lo, 1.0, points=pts or None, epsabs=1e-12, epsrel=1e-10,
                            limit=200)
    return val


def closed_form_metrics(scheme, F: ValueDistribution, model, profile: RiskProfile,
                        exact_grid: bool = False) -> Metrics:
    """Expected revenue and welfare from closed forms.

    Parameters
    ----------
    scheme : BuyItNow or ConstantPPP
    F : ValueDistribution
    model : RandomWalkModel or BinaryValueModel
    profile : RiskProfile
    exact_grid : bool
        If false, the continuous-type expressions are integrated against F.
        If true (walk only), V0 is placed on the grid by the same randomized
        rounding the simulator uses and grid-exact stop levels are applied, so
        the result is the exact expectation of the Monte Carlo estimator.

    Raises
    ------
    NotClosedFormError
        For schemes, models or risk profiles without a closed form.
    """
    lower, rev, wel = _per_type(scheme, model, profile, exact_grid)
    if exact_grid:
        if not isinstance(model, RandomWalkModel):
            raise UnsupportedError("exact_grid applies to the random walk only")
        w = _lattice_weights(F, model.n)
        x = model.grid
        return Metrics(float(w @ rev(x)), float(w @ wel(x)))
    if lower is None:
        acc = lambda v: np.asarray(rev(v)) > 0  # noqa: E731
        cut = _acceptance_cutoff(acc) if scheme.price > 0 else 0.0
        if cut is None:
            return Metrics(0.0, 0.0)
        lower = cut
    return Metrics(_expect(F, rev, lower, (lower,)), _expect(F, wel, lower, (lower,)))


def closed_form_revenue(scheme, F: ValueDistribution, model, profile: RiskProfile,
                        exact_grid: bool = False) -> float:
    """Expected revenue; see :func:`closed_form_metrics`."""
    return closed_form_metrics(scheme, F, model, profile, exact_grid).revenue


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinOptimum:
    """Optimal one-time price, the lowest accepting type, and the revenue."""

    price: float
    revenue: float
    threshold: float

    def to_dict(self):
        return {"price": self.price, "revenue": self.revenue, "threshold": self.threshold}


def optimal_bin(F: ValueDistribution, model, profile: RiskProfile,
                resolution: int = 10_000) -> BinOptimum:
    """Maximize P(t)·P(V ≥ t) over the lowest accepting type t.

    P(t) is the largest one-time price every type above t accepts.
    """
    if resolution < 1000:
        raise DomainError("grid resolution must be at least 1000")
    price_of = _bin_price_curve(profile, model)

    def revenue(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(price_of(t), dtype=float) * F._survival(t)

    t, r = grid_argmax(revenue, resolution=resolution, candidates=F.candidate_points())
    return BinOptimum(float(price_of(np.asarray(t))), float(r), float(t))


def optimal_constant_ppp(F: ValueDistribution, model, profile: RiskProfile,
                         resolution: int = 1000, p_max: float = 1.0):
    """Grid search for the best constant per-usage price.

    Returns
    -------
    (float, float)
        Price and expected revenue.
    """
    if resolution < 1000:
        raise DomainError("grid resolution must be at least 1000")
    ps = np.linspace(0.0, p_max, int(resolution) + 1)
    revs = np.array([closed_form_revenue(ConstantPPP(float(p)), F, model, profile) for p in ps])
    best = float(np.max(revs))
    i = int(np.flatnonzero(revs >= best - 1e-12 * max(1.0, abs(best)))[0])
    return float(ps[i]), float(revs[i])


@dataclass(frozen=True)
class DominanceReport:
    """Metrics of the selected PPP price and of the optimal BIN."""

    price: float
    bin: BinOptimum
    ppp: Metrics
    bin_metrics: Metrics
    found: bool
    fallback: bool

    @property
    def dominates(self) -> bool:
        tol = 1e-9
        return (self.ppp.revenue >= self.bin_metrics.revenue - tol
                and self.ppp.welfare >= self.bin_metrics.welfare - tol
                and self.ppp.utility >= self.bin_metrics.utility - tol)

    def to_dict(self):
        return {"price": self.price, "bin": self.bin.to_dict(), "ppp": self.ppp.to_dict(),
                "bin_metrics": self.bin_metrics.to_dict(), "found": self.found,
                "fallback": self.fallback, "dominates": self.dominates}


def bcm_dominating_price(F: ValueDistribution, model: BinaryValueModel,
                         resolution: int = 10_000) -> tuple[float, DominanceReport]:
    """Largest constant price whose revenue and buyer utility both match the
    optimal risk-neutral BIN.

    The scan starts at the BIN threshold type and moves down one grid step
    at a time.  If no grid price qualifies, the price at the threshold is
    returned with ``fallback=True``.
    """
    if not isinstance(model, BinaryValueModel):
        raise UnsupportedError("the dominance scan is defined for the binary model")
    prof = RiskProfile(0.0)
    opt = optimal_bin(F, model, prof, resolution)
    bm = closed_form_metrics(BuyItNow(opt.price), F, model, prof)
    tol = 1e-9 * max(1.0, bm.revenue)
    k0 = math.floor(opt.threshold * resolution + 1e-9)
    prices = [opt.threshold] + [k / resolution for k in range(k0, -1, -1)
                                if k / resolution < opt.threshold - 1e-15]
    for p in prices:
        pm = closed_form_metrics(ConstantPPP(p), F, model, prof)
        if pm.revenue >= bm.revenue - tol and pm.utility >= bm.utility - tol:
            return p, DominanceReport(p, opt, pm, bm, True, False)
    p = opt.threshold
    pm = closed_form_metrics(ConstantPPP(p), F, model, prof)
    return p, DominanceReport(p, opt, pm, bm, False, True)
