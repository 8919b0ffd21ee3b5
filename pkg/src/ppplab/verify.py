"""Verification suite: closed forms, oracles, optimizers and Monte Carlo.

Each ``criterion_*`` function computes its quantities and returns a list of
:class:`Check` records, one per assertion, at the tolerances the package
promises.  ``scale`` shrinks every Monte Carlo sample size (never below
10⁴) for quick runs; standard-error-based tolerances adapt automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics as A
from .distributions import PointMass, PowerCdf, Uniform01, monopoly_price
from .process import (BinaryValueModel, GeneralMarkovModel, GeometricStop, LinearMean,
                      RandomWalkModel)
from .schemes import (BuyItNow, ConstantPPP, alpha_ppp_scheme, bcm_dominating_price,
                      closed_form_metrics, closed_form_revenue, optimal_bin,
                      optimal_constant_ppp)
from .sim import oracle as O
from .sim.checks import free_trial_bounds_check, measure_general_walk, tail_probability_check
from .sim.engine import chunk_rng, estimate
from .strategy import RiskProfile, solve_policy_backward

__all__ = ["Check", "CRITERIA", "run_all"]

RN = RiskProfile(0.0)
INF = RiskProfile(math.inf)


@dataclass
class Check:
    """Outcome of one assertion."""

    criterion: int
    name: str
    passed: bool
    measured: object
    expected: str
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.criterion} {self.name}: measured={_fmt(self.measured)} " \
               f"expected {self.expected}" + (f" ({self.detail})" if self.detail else "")

    def to_dict(self):
        return {"criterion": self.criterion, "name": self.name, "passed": bool(self.passed),
                "measured": _jsonable(self.measured), "expected": self.expected,
                "detail": self.detail}


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _n(n, scale):
    return max(10_000, int(round(n * scale)))


def _rel_close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


# ---------------------------------------------------------------------------

def criterion_1(scale=1.0, seed=20240101):
    """Uniform initial values, δ = 0.1: PPP(½) against the optimal BIN."""
    d = 0.1
    W, F = RandomWalkModel(d), Uniform01()
    out = []
    ppp = closed_form_revenue(ConstantPPP(0.5), F, W, RN) * d * d
    out.append(Check(1, "ppp_closed_form", abs(ppp - 1 / 3) <= 1e-8, ppp, "1/3 ± 1e-8"))
    opt = optimal_bin(F, W, RN)
    b = opt.revenue * d * d
    quad = _quadratic_bin(F, d)
    out.append(Check(1, "bin_optimal", abs(b - 5 / 16) <= 0.02, b, "5/16 ± 0.02",
                     f"threshold {opt.threshold:.4f}; the quadratic cumulative-value "
                     f"expression would give {quad:.4f}"))
    n = _n(10 ** 6, scale)
    for label, scheme in (("ppp", ConstantPPP(0.5)), ("bin", BuyItNow(opt.price))):
        exact = closed_form_revenue(scheme, F, W, RN, exact_grid=True)
        est = estimate(scheme, RN, W, F, n, seed).revenue
        out.append(Check(1, f"mc_{label}_within_1pct", _rel_close(est.mean, exact, 0.01),
                         est.mean * d * d, f"{exact * d * d:.6f} ± 1%",
                         f"n={n}, se={est.std_err * d * d:.2g}"))
    out.append(Check(1, "ppp_beats_bin", ppp > b, ppp - b, "> 0"))
    return out


def _quadratic_bin(F, d):
    def rev(t):
        return A.cumulative_value_quadratic(t, d) * F._survival(np.asarray(t))
    t = np.linspace(0, 1, 10001)
    return float(np.max(rev(t))) * d * d


def criterion_2(scale=1.0, seed=20240102):
    """F(x) = x², δ = 0.1."""
    d = 0.1
    W, F = RandomWalkModel(d), PowerCdf(2.0)
    ppp = closed_form_revenue(ConstantPPP(0.5), F, W, RN) * d * d
    opt = optimal_bin(F, W, RN)
    b = opt.revenue * d * d
    quad = _quadratic_bin(F, d)
    return [
        Check(2, "ppp_closed_form", abs(ppp - 5 / 12) <= 1e-6, ppp, "5/12 ± 1e-6"),
        Check(2, "bin_optimal", abs(b - 0.479) <= 0.02, b, "0.479 ± 0.02",
              f"threshold {opt.threshold:.4f}; the quadratic cumulative-value expression "
              f"would give {quad:.4f}"),
        Check(2, "bin_beats_ppp", b > ppp, b - ppp, "> 0"),
    ]


def criterion_3(scale=1.0, seed=0):
    """Closed forms against the grid oracle."""
    errs = {k: 0.0 for k in ("absorption_time", "reflected_hit_time", "cumulative_value",
                             "cumulative_value_to", "time_to_one_given_hit",
                             "two_sided_time", "hit_prob")}
    for d in (0.5, 0.25, 0.125):
        W = RandomWalkModel(d)
        g = W.grid
        for i, v in enumerate(g):
            errs["absorption_time"] = max(errs["absorption_time"],
                                          abs(O.hitting_time(W, v, 0.0) - A.absorption_time(v, d)))
            errs["cumulative_value"] = max(errs["cumulative_value"],
                                           abs(O.cumulative_value(W, v, 0.0)
                                               - A.cumulative_value(v, d)))
            if v > 0:
                errs["time_to_one_given_hit"] = max(
                    errs["time_to_one_given_hit"],
                    abs(O.conditional_time_to_one(W, v) - A.conditional_time_to_one(v, d)))
            for w in g[:i + 1]:
                errs["reflected_hit_time"] = max(errs["reflected_hit_time"],
                                                 abs(O.hitting_time(W, v, w)
                                                     - A.reflected_hit_time(v, w, d)))
                errs["cumulative_value_to"] = max(errs["cumulative_value_to"],
                                                  abs(O.cumulative_value(W, v, w)
                                                      - A.cumulative_value_to(v, w, d)))
                for u in g[i:]:
                    errs["two_sided_time"] = max(errs["two_sided_time"],
                                                 abs(O.two_sided_time(W, v, w, u)
                                                     - A.two_sided_time(v, w, u, d)))
                    if w < u:
                        errs["hit_prob"] = max(errs["hit_prob"],
                                               abs(O.absorption_prob(W, v, u, w)
                                                   - A.hit_prob(v, w, u)))
    return [Check(3, k, e <= 1e-9, e, "max abs error ≤ 1e-9", "δ ∈ {1/2, 1/4, 1/8}")
            for k, e in errs.items()]


def criterion_4(scale=1.0, seed=0):
    """Risk-neutral buyer at price ½."""
    d = 0.1
    W = RandomWalkModel(d)
    table = solve_policy_backward(ConstantPPP(0.5), RN, W)
    H = table.horizon
    buys = table.decisions[:, 1:, 0]
    g = W.grid
    lhs = 0.5 * A.absorption_time(g, d)
    rhs = 0.5 * A.cumulative_value(g, d)
    return [
        Check(4, "dp_buys_everywhere", bool(buys.all()), int(buys.sum()),
              f"{buys.size} states", f"usages 1..{H}, every nonzero value"),
        Check(4, "per_type_revenue_bound", bool(np.all(lhs >= rhs - 1e-12)),
              float(np.min(lhs - rhs)), "½T(v) − ½C(v) ≥ 0 on the grid"),
    ]


def criterion_5(scale=1.0, seed=20240105):
    """Binary model, uniform values, geometric stop with mean 10v."""
    B = BinaryValueModel(GeometricStop(LinearMean(10.0, 0.0)))
    F = Uniform01()
    ppp = closed_form_metrics(ConstantPPP(2 / 3), F, B, RN)
    opt = optimal_bin(F, B, RN)
    out = [
        Check(5, "ppp_revenue_at_two_thirds", abs(ppp.revenue - 50 / 27) <= 1e-6, ppp.revenue,
              "50/27 ± 1e-6"),
        Check(5, "bin_revenue", abs(opt.revenue - 40 / 27) <= 1e-6, opt.revenue,
              "40/27 ± 1e-6", f"threshold {opt.threshold:.6f}"),
    ]
    p, rep = bcm_dominating_price(F, B)
    out.append(Check(5, "dominating_price", rep.found and rep.dominates, p,
                     "revenue, welfare and utility ≥ BIN",
                     f"revenue {rep.ppp.revenue:.4f} vs {rep.bin_metrics.revenue:.4f}, "
                     f"utility {rep.ppp.utility:.5f} vs {rep.bin_metrics.utility:.5f}"))
    n = _n(10 ** 5, scale)
    e_ppp = estimate(ConstantPPP(p), RN, B, F, n, seed)
    e_bin = estimate(BuyItNow(opt.price), RN, B, F, n, seed + 1)
    for metric in ("revenue", "welfare", "utility"):
        a, b = getattr(e_ppp, metric), getattr(e_bin, metric)
        se = math.hypot(a.std_err, b.std_err)
        out.append(Check(5, f"mc_{metric}", a.mean - b.mean >= -3 * se, a.mean - b.mean,
                         "PPP − BIN ≥ −3 SE", f"n={n}, se={se:.3g}"))
    return out


def criterion_6(scale=1.0, seed=0):
    """Infinitely averse buyer: PPP within 1/(4δ) of BIN, and tightness."""
    out = []
    for F in (Uniform01(), PowerCdf(2.0)):
        for d in (0.1, 0.05):
            W = RandomWalkModel(d)
            _, rp = optimal_constant_ppp(F, W, INF)
            rb = optimal_bin(F, W, INF).revenue
            out.append(Check(6, f"ppp_vs_bin[{F.kind},δ={d}]", rp >= rb / (4 * d), rp / rb,
                             f"≥ 1/(4δ) = {1 / (4 * d):.3g}"))
    ratios = {}
    for d in (0.1, 0.05):
        W = RandomWalkModel(d)
        F = PointMass(0.5)
        _, rp = optimal_constant_ppp(F, W, INF)
        rb = optimal_bin(F, W, INF).revenue
        ratios[d] = ratio = rp / rb
        out.append(Check(6, f"point_mass_ratio[δ={d}]", ratio <= 2 / d, ratio,
                         f"≤ 2/δ = {2 / d:.3g}", f"δ·ratio = {d * ratio:.4f}"))
    growth = ratios[0.05] / ratios[0.1]
    out.append(Check(6, "point_mass_ratio_growth", 1.5 <= growth <= 2.5, growth,
                     "ratio(δ/2)/ratio(δ) ∈ [1.5, 2.5]", "ratio grows like 1/δ"))
    return out


def criterion_7(scale=1.0, seed=0):
    """PPP at half the monopoly price against the risk-neutral BIN optimum."""
    d = 0.1
    W, F = RandomWalkModel(d), Uniform01()
    mu = monopoly_price(F)
    rp = closed_form_revenue(ConstantPPP(mu / 2), F, W, INF)
    rb = optimal_bin(F, W, RN).revenue
    return [
        Check(7, "ppp_half_monopoly_vs_bin", rp >= mu / 10 * rb, rp / rb, f"≥ μ/10 = {mu / 10:.3g}",
              f"μ = {mu:.6f}"),
    ]


def criterion_8(scale=1.0, seed=20240108):
    """Free-trial revenue floors."""
    d = 0.1
    n = _n(10 ** 5, scale)
    out = []
    for j, variant in enumerate(("ppp", "bin")):
        for k, v in enumerate((0.25, 0.5, 0.75, 1.0)):
            r = free_trial_bounds_check(variant, v, d, n, chunk_rng(seed, 10 * j + k))
            out.append(Check(8, f"free_trial_{variant}[v={v}]", r.passed, r.empirical_revenue,
                             f"≥ {r.lower_bound:.4f} − 3 SE", f"n={n}, se={r.std_err:.3g}"))
    return out


def criterion_9(scale=1.0, seed=20240109):
    """Tail of the absorption time."""
    n = _n(10 ** 5, scale)
    out = []
    for k in (2, 4, 6):
        r = tail_probability_check(0.5, 0.1, k, n, chunk_rng(seed, k))
        out.append(Check(9, f"tail[k={k}]", r.passed, r.empirical,
                         f"≤ {r.bound:g} + 3 SE", f"n={n}"))
    return out


def criterion_10(scale=1.0, seed=20240110):
    """α-averse buyers: the PPP scheme against the optimal α-BIN."""
    d = 0.1
    W, F = RandomWalkModel(d), Uniform01()
    n = _n(10 ** 5, scale)
    out = []
    for j, alpha in enumerate((0.01, 1.0, 100.0)):
        prof = RiskProfile(alpha)
        rb = optimal_bin(F, W, prof).revenue
        scheme = alpha_ppp_scheme(alpha, F, W)
        est = estimate(scheme, prof, W, F, n, seed + j)
        target = rb / (32 * (1 + math.sqrt(d)))
        out.append(Check(10, f"revenue[α={alpha:g}]", est.revenue.mean >= target,
                         est.revenue.mean, f"≥ {target:.4f}",
                         f"{scheme}, n={n}"))
        out.append(Check(10, f"max_loss[α={alpha:g}]", est.max_loss <= 1 / alpha + 1e-9,
                         est.max_loss, f"≤ 1/α = {1 / alpha:g}"))
    return out


def criterion_11(scale=1.0, seed=20240111, slack_constant=10.0):
    """General martingale walk: the five path-statistic bounds."""
    out = []
    skew = GeneralMarkovModel.skewed(0.05)
    stats = measure_general_walk(skew, 0.5, _n(10 ** 6, scale), chunk_rng(seed, 0))
    for c in A.appendix_b_check(0.5, skew, stats, slack_constant):
        out.append(Check(11, f"skewed.{c.quantity_name}", c.passed, c.measured,
                         f"[{c.lower:.4g}, {c.upper:.4g}]", f"K={slack_constant:g}"))
    sym = GeneralMarkovModel.symmetric(0.05)
    stats = measure_general_walk(sym, 0.5, _n(2 * 10 ** 5, scale), chunk_rng(seed, 1))
    k_sym = min(1.0, slack_constant)
    for c in A.appendix_b_check(0.5, sym, stats, k_sym):
        out.append(Check(11, f"symmetric.{c.quantity_name}", c.passed, c.measured,
                         f"[{c.lower:.4g}, {c.upper:.4g}]", f"K={k_sym:g}"))
    return out


def criterion_12(scale=1.0, seed=20240112):
    """δ²-scaled PPP(½) revenue does not depend on δ."""
    F = Uniform01()
    vals = []
    out = []
    n = _n(2 * 10 ** 5, scale)
    for j, d in enumerate((0.5, 0.25, 0.1)):
        W = RandomWalkModel(d)
        vals.append(closed_form_revenue(ConstantPPP(0.5), F, W, RN) * d * d)
        exact = closed_form_revenue(ConstantPPP(0.5), F, W, RN, exact_grid=True)
        est = estimate(ConstantPPP(0.5), RN, W, F, n, seed + j).revenue
        out.append(Check(12, f"mc_consistent[δ={d}]", est.contains(exact), est.mean * d * d,
                         f"99% CI contains {exact * d * d:.6f}", f"n={n}"))
    spread = max(vals) - min(vals)
    out.insert(0, Check(12, "closed_form_identical", spread <= 1e-9, spread, "spread ≤ 1e-9",
                        f"values {', '.join(f'{v:.12f}' for v in vals)}"))
    return out


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}


def run_all(scale: float = 1.0, slack_constant: float = 10.0, only=None, seed=None):
    """Run every criterion (or those in ``only``) and return all checks.

    ``seed`` replaces the built-in per-criterion seeds by ``seed + k``.
    """
    checks = []
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        kw = {} if seed is None else {"seed": int(seed) + k}
        if k == 11:
            kw["slack_constant"] = slack_constant
        checks.extend(fn(scale, **kw))
    return checks
