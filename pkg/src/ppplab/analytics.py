"""Closed forms for the reflected/absorbed ±δ walk and the binary model.

All functions accept scalars or numpy arrays and evaluate polynomials in
floating point without grid snapping.  On the δ-grid they are exact solutions
of the corresponding linear recurrences; :mod:`ppplab.sim.oracle` solves those
recurrences independently.

Notation: ``v`` start value, ``w`` lower exit level, ``u`` upper level or
target, ``p`` per-usage price.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PrecisionError

__all__ = [
    "WalkParams",
    "BoundCheck",
    "hit_prob",
    "two_sided_time",
    "reflected_hit_time",
    "absorption_time",
    "conditional_time_to_one",
    "cumulative_value_to",
    "cumulative_value",
    "cumulative_value_quadratic",
    "rn_ppp_utility",
    "rn_threshold",
    "rn_grid_threshold",
    "worst_case_cumulative",
    "worst_case_cumulative_approx",
    "binary_cumulative",
    "appendix_b_check",
    "lower_bound_ppp_free_trial",
    "lower_bound_bin_free_trial",
]

_TOL = 1e-12


@dataclass(frozen=True)
class WalkParams:
    """Step size δ; must satisfy 0 < δ ≤ ½ with 1/δ an integer."""

    delta: float

    def __post_init__(self):
        d = float(self.delta)
        if not (0.0 < d <= 0.5) or abs(round(1.0 / d) * d - 1.0) > 1e-9:
            raise DomainError(f"invalid step size {d}")


def _delta(params) -> float:
    d = getattr(params, "delta", params)
    d = float(d)
    if not d > 0:
        raise DomainError(f"step size must be positive, got {d}")
    return d


def _scalar_out(x, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(x)
    return x


def _require(cond, msg):
    if np.any(~np.asarray(cond)):
        raise DomainError(msg)


def hit_prob(v, w, u):
    """Probability of reaching ``u`` before ``w`` from ``v``: (v − w)/(u − w)."""
    v, w, u = (np.asarray(a, dtype=float) for a in (v, w, u))
    _require(w < u, "need w < u")
    _require((w - _TOL <= v) & (v <= u + _TOL), "need w <= v <= u")
    return _scalar_out((v - w) / (u - w), v, w, u)


def two_sided_time(v, w, u, params):
    """Expected exit time from (w, u): (v − w)(u − v)/δ²."""
    d = _delta(params)
    v, w, u = (np.asarray(a, dtype=float) for a in (v, w, u))
    _require((w - _TOL <= v) & (v <= u + _TOL), "need w <= v <= u")
    return _scalar_out((v - w) * (u - v) / d ** 2, v, w, u)


def reflected_hit_time(v, u, params):
    """Expected time to first reach ``u < v`` with reflection at 1.

    h_vu = (v − u)(2 − v − u)/δ².
    """
    d = _delta(params)
    v, u = np.asarray(v, dtype=float), np.asarray(u, dtype=float)
    _require(u <= v + _TOL, "target must not exceed the start value")
    _require(v <= 1.0 + _TOL, "start value must be at most 1")
    return _scalar_out((v - u) * (2.0 - v - u) / d ** 2, v, u)


def absorption_time(v, params):
    """Expected time to absorption T(v) = v(2 − v)/δ²."""
    return reflected_hit_time(v, 0.0 * np.asarray(v, dtype=float), params)


def conditional_time_to_one(v, params):
    """E[τ | the walk reaches 1 before 0] = (1 − v²)/(3δ²)."""
    d = _delta(params)
    v = np.asarray(v, dtype=float)
    _require((v > 0.0) & (v <= 1.0 + _TOL), "need 0 < v <= 1")
    return _scalar_out((1.0 - v ** 2) / (3.0 * d ** 2), v)


def cumulative_value_to(v, w, params):
    """Expected value collected from ``v`` until the walk first reaches ``w``.

    With reflection at 1 the recurrence C(x) = x + ½C(x − δ) + ½C(x + δ),
    C(1) = 1 + C(1 − δ), C(w) = 0 has the cubic solution

        C(v, w) = (v − w)(1 + δ²/3)/δ² − (v³ − w³)/(3δ²).
    """
    d = _delta(params)
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    _require(w <= v + _TOL, "need w <= v")
    _require(v <= 1.0 + _TOL, "start value must be at most 1")
    out = (v - w) * (1.0 + d ** 2 / 3.0) / d ** 2 - (v ** 3 - w ** 3) / (3.0 * d ** 2)
    return _scalar_out(out, v, w)


def cumulative_value(v, params):
    """Expected cumulative value until absorption: (3v − v³ + vδ²)/(3δ²)."""
    v = np.asarray(v, dtype=float)
    _require((v >= 0.0) & (v <= 1.0 + _TOL), "need 0 <= v <= 1")
    return cumulative_value_to(v, 0.0 * v, params)


def cumulative_value_quadratic(v, params, w=0.0):
    """Quadratic expression (v − w)/δ²·(v(1 − v) + (1 − w)(1 − δ) + δ²).

    Kept for comparison.  It coincides with :func:`cumulative_value_to` at
    δ = ½ only; for smaller δ it overstates the cumulative value.
    """
    d = _delta(params)
    v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
    out = (v - w) / d ** 2 * (v * (1.0 - v) + (1.0 - w) * (1.0 - d) + d ** 2)
    return _scalar_out(out, v, w)


def rn_ppp_utility(v, w, p, params):
    """Risk-neutral expected utility of buying at constant price ``p`` from
    ``v`` until the value first reaches ``w``: C(v, w) − p·h_vw."""
    v, w, p = (np.asarray(a, dtype=float) for a in (v, w, p))
    _require((0.0 <= w + _TOL) & (w <= v + _TOL) & (v <= 1.0 + _TOL), "need 0 <= w <= v <= 1")
    _require(p >= 0.0, "price must be nonnegative")
    out = cumulative_value_to(v, w, params) - p * reflected_hit_time(v, w, params)
    return _scalar_out(out, v, w, p)


def rn_threshold(p):
    """Continuous stop level max(0, 2p − 1) for a risk-neutral buyer."""
    p = np.asarray(p, dtype=float)
    _require(p >= 0.0, "price must be nonnegative")
    return _scalar_out(np.maximum(0.0, 2.0 * p - 1.0), p)


def rn_grid_threshold(p: float, params) -> float:
    """Smallest grid level ``w`` such that buying until ``w`` is reached has
    nonnegative expected utility from every grid value above ``w``.

    This is the exact stop level of a risk-neutral buyer facing a constant
    price on the δ-grid.  It equals :func:`rn_threshold` whenever 2p − 1 is a
    grid point.
    """
    d = _delta(params)
    n = round(1.0 / d)
    grid = np.arange(n + 1) / n
    for k in range(n + 1):
        w = grid[k]
        vs = grid[k + 1:]
        if vs.size == 0:
            return float(w)
        u = rn_ppp_utility(vs, np.full_like(vs, w), np.full_like(vs, p), d)
        scale = max(1.0, float(np.max(np.abs(u))))
        if np.all(u >= -1e-11 * scale):
            return float(w)
    return 1.0


def worst_case_cumulative(v, params):
    """Value collected along the straight descent v, v − δ, ..., δ:
    v(v + δ)/(2δ)."""
    d = _delta(params)
    v = np.asarray(v, dtype=float)
    return _scalar_out(v * (v + d) / (2.0 * d), v)


def worst_case_cumulative_approx(v, params):
    """Continuum version v²/(2δ) of :func:`worst_case_cumulative`."""
    d = _delta(params)
    v = np.asarray(v, dtype=float)
    return _scalar_out(v ** 2 / (2.0 * d), v)


def binary_cumulative(v, model):
    """v·E[T | v] for a :class:`~ppplab.process.BinaryValueModel`."""
    v = np.asarray(v, dtype=float)
    _require((v >= 0.0) & (v <= 1.0), "need 0 <= v <= 1")
    return _scalar_out(v * np.asarray(model.expected_stop(v), dtype=float), v)


# ---------------------------------------------------------------------------
# bounds for the general martingale model
# ---------------------------------------------------------------------------

@dataclass
class BoundCheck:
    """A measured quantity and the interval it must fall in."""

    quantity_name: str
    measured: float
    lower: float
    upper: float
    slack_constant: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError("lower bound exceeds upper bound")

    @property
    def passed(self) -> bool:
        return bool(self.lower <= self.measured <= self.upper)

    def to_dict(self):
        return {"quantity": self.quantity_name, "measured": self.measured,
                "lower": self.lower, "upper": self.upper,
                "slack_constant": self.slack_constant, "passed": self.passed}


def appendix_b_check(v, model, empirical, slack_constant: float = 10.0,
                     x: float = 0.5, min_samples: int = 10_000):
    """Compare measured statistics of the general model with their O(ε) bands.

    Parameters
    ----------
    v : float
        Start value in (0, 1).
    model : GeneralMarkovModel
        Supplies ε, δ² and c₃.
    empirical : mapping
        Output of :func:`ppplab.sim.checks.measure_general_walk`: for each key
        ``hit_one``, ``exit_time``, ``return_time``, ``cumulative_value`` and
        ``time_to_one`` a ``(mean, std_err, n)`` triple.
    slack_constant : float
        K in the K·ε slack.
    x : float
        Level used for the post-reflection return time.
    min_samples : int
        Minimum sample count per statistic.

    Returns
    -------
    list of BoundCheck
        One check per statistic.  Each band is widened by 3 standard errors.

    Notes
    -----
    The conditional time to reach 1 is compared with
    (1 − v² − c₃(1 − v)/δ²)/(3δ²); the third-moment correction carries a
    1/δ² factor so that it is dimensionless.
    The cumulative value is compared with the band (2/3)(v − Kε)/δ² to
    (v + Kε)/δ², the range of δ²·C(v)·(1 − v²/3)⁻¹ over [0, 1].
    """
    eps = model.epsilon
    d2 = model.delta_sq
    c3 = model.c3
    K = float(slack_constant)
    s = K * eps

    def stat(key):
        mean, se, n = empirical[key]
        if n < min_samples:
            raise PrecisionError(f"{key}: {n} samples, need at least {min_samples}")
        return float(mean), 3.0 * float(se)

    checks = []
    m, w = stat("hit_one")
    checks.append(BoundCheck("hit_one_before_zero", m, v - s - w, v + s + w, K))

    m, w = stat("exit_time")
    checks.append(BoundCheck("exit_time", m, (v * (1 - v) - s) / d2 - w,
                             (v * (1 - v) + s) / d2 + w, K))

    m, w = stat("return_time")
    checks.append(BoundCheck(f"return_time_to_{x:g}", m, ((1 - x) ** 2 - s) / d2 - w,
                             ((1 - x) ** 2 + s) / d2 + w, K))

    m, w = stat("cumulative_value")
    checks.append(BoundCheck("cumulative_value", m, (2.0 / 3.0) * (v - s) / d2 - w,
                             (v + s) / d2 + w, K))

    m, w = stat("time_to_one")
    centre = (1 - v ** 2 - c3 * (1 - v) / d2) / (3 * d2)
    lo, hi = sorted((centre * (1 - s), centre * (1 + s)))
    checks.append(BoundCheck("time_to_one_given_hit", m, lo - w, hi + w, K))
    return checks


def lower_bound_ppp_free_trial(c: float = 0.089) -> float:
    """Coefficient of v/δ² in the free-trial PPP revenue bound: c((1 − c)² − 2/3)/2."""
    return c * ((1.0 - c) ** 2 - 2.0 / 3.0) / 2.0


def lower_bound_bin_free_trial() -> float:
    """Coefficient of v/δ² in the free-trial BIN revenue bound: 0.055/36.

    0.055 is 1 − 2e^{−3/4} rounded down.
    """
    return 0.055 / 36.0
