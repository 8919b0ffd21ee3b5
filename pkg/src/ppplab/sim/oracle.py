"""Exact expectations for the reflected/absorbed walk by direct linear solves.

Each query sets up the first-step recurrence of a birth-death chain on the
δ-grid and solves the resulting tridiagonal system with
:func:`scipy.linalg.solve_banded`.  Nothing here uses the closed forms in
:mod:`ppplab.analytics`; the two are compared in the test suite.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from ..errors import DomainError
from ..process import RandomWalkModel

__all__ = [
    "absorption_prob",
    "hitting_time",
    "two_sided_time",
    "cumulative_value",
    "conditional_time_to_one",
    "revenue_under_threshold",
    "utility_under_threshold",
    "dp_oracle",
]


def _solve_chain(n_states: int, reward: np.ndarray, top_reflects: bool,
                 high_value: float = 0.0) -> np.ndarray:
    """Solve x_i = r_i + ½x_{i−1} + ½x_{i+1} on the interior of 0..n_states.

    State 0 is fixed to 0.  If ``top_reflects`` the last state obeys
    x_top = r_top + x_{top−1}; otherwise it is fixed to ``high_value``.
    """
    m = n_states if top_reflects else n_states - 1
    out = np.zeros(n_states + 1)
    if not top_reflects:
        out[-1] = high_value
    if m <= 0:
        return out
    ab = np.zeros((3, m))
    rhs = np.asarray(reward[1:m + 1], dtype=float).copy()
    ab[1, :] = 1.0
    ab[0, 1:] = -0.5   # superdiagonal
    ab[2, :-1] = -0.5  # subdiagonal
    if top_reflects:
        if m >= 2:
            ab[2, -2] = -1.0
    else:
        rhs[-1] += 0.5 * high_value
    out[1:m + 1] = solve_banded((1, 1), ab, rhs)
    return out


def _idx(model: RandomWalkModel, *vals):
    return [model.index_of(v) for v in vals]


def absorption_prob(model: RandomWalkModel, v, u, w) -> float:
    """Probability that the walk from ``v`` reaches ``u`` before ``w``."""
    iv, iu, iw = _idx(model, v, u, w)
    if not iw < iu:
        raise DomainError("need w < u")
    if not iw <= iv <= iu:
        raise DomainError("need w <= v <= u")
    k = iu - iw
    sol = _solve_chain(k, np.zeros(k + 1), top_reflects=False, high_value=1.0)
    return float(sol[iv - iw])


def two_sided_time(model: RandomWalkModel, v, w, u) -> float:
    """Expected time to exit (w, u)."""
    iv, iw, iu = _idx(model, v, w, u)
    if not iw <= iv <= iu:
        raise DomainError("need w <= v <= u")
    k = iu - iw
    if k == 0:
        return 0.0
    sol = _solve_chain(k, np.ones(k + 1), top_reflects=False)
    return float(sol[iv - iw])


def hitting_time(model: RandomWalkModel, v, target) -> float:
    """Expected time from ``v`` to first reach ``target <= v`` (reflection at 1)."""
    iv, it = _idx(model, v, target)
    if it > iv:
        raise DomainError("target above the start value may never be reached")
    k = model.n - it
    if k == 0:
        return 0.0
    sol = _solve_chain(k, np.ones(k + 1), top_reflects=True)
    return float(sol[iv - it])


def cumulative_value(model: RandomWalkModel, v, w=0.0) -> float:
    """Expected value collected from ``v`` until the walk first reaches ``w``."""
    iv, iw = _idx(model, v, w)
    if iw > iv:
        raise DomainError("need w <= v")
    k = model.n - iw
    if k == 0:
        return 0.0
    reward = (iw + np.arange(k + 1)) / model.n
    sol = _solve_chain(k, reward, top_reflects=True)
    return float(sol[iv - iw])


def conditional_time_to_one(model: RandomWalkModel, v) -> float:
    """E[τ | the walk from ``v`` reaches 1 before 0].

    Solves a(x) = P(reach 1 first) and then b(x) = a(x) + ½b(x−δ) + ½b(x+δ)
    with b = 0 at both ends; the answer is b(v)/a(v).
    """
    (iv,) = _idx(model, v)
    n = model.n
    if iv == 0:
        raise DomainError("the conditioning event is empty at v = 0")
    a = _solve_chain(n, np.zeros(n + 1), top_reflects=False, high_value=1.0)
    b = _solve_chain(n, a, top_reflects=False)
    return float(b[iv] / a[iv])


def revenue_under_threshold(model: RandomWalkModel, v, w, p) -> float:
    """Payments at constant price ``p`` from ``v`` until the value reaches ``w``."""
    if model.index_of(v) <= model.index_of(w):
        return 0.0
    return float(p) * hitting_time(model, v, w)


def utility_under_threshold(model: RandomWalkModel, v, w, p) -> float:
    """Expected value minus payments from ``v`` until the value reaches ``w``."""
    if model.index_of(v) <= model.index_of(w):
        return 0.0
    return cumulative_value(model, v, w) - float(p) * hitting_time(model, v, w)


_QUERIES = {
    "absorption_prob": absorption_prob,
    "hitting_time": hitting_time,
    "two_sided_time": two_sided_time,
    "cumulative_value": cumulative_value,
    "conditional_time_to_one": conditional_time_to_one,
    "revenue_under_threshold": revenue_under_threshold,
    "utility_under_threshold": utility_under_threshold,
}


def dp_oracle(model: RandomWalkModel, query: str, *args) -> float:
    """Dispatch ``query`` (one of the function names in this module)."""
    try:
        fn = _QUERIES[query]
    except KeyError:
        raise DomainError(f"unknown oracle query {query!r}") from None
    return fn(model, *args)
