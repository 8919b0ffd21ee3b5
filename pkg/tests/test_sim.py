import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppplab import analytics as A
from ppplab.distributions import PointMass, PowerCdf, Uniform01
from ppplab.errors import DomainError
from ppplab.process import (BinaryValueModel, DeterministicStop, GeneralMarkovModel,
                            GeometricStop, LinearMean, RandomWalkModel)
from ppplab.schemes import (BuyItNow, ConstantPPP, FreeTrialPPP, RentToOwn,
                            closed_form_revenue, recommended_free_trial_ppp)
from ppplab.sim.checks import (free_trial_bounds_check, measure_general_walk,
                               tail_probability_check)
from ppplab.sim.engine import (CHUNK, EstimateResult, chunk_rng, estimate, run_outcomes,
                               simulate_batch, simulate_once)
from ppplab.strategy import Myopic, RiskProfile, Threshold, respond

W = RandomWalkModel(0.1)
RN, INF = RiskProfile(0.0), RiskProfile(math.inf)
DET5 = BinaryValueModel(DeterministicStop(LinearMean(0.0, 5.0)))


def test_simulate_once_binary_example():
    out = simulate_once(ConstantPPP(0.3), Myopic(), DET5, 0.4, np.random.default_rng(0))
    assert out.revenue == pytest.approx(1.5)
    assert out.welfare == pytest.approx(2.0)
    assert out.utility == pytest.approx(0.5)
    assert out.stop_time == 5 and not out.capped


def test_simulate_once_zero_value():
    out = simulate_once(ConstantPPP(0.3), Threshold(0.0), W, 0.0, np.random.default_rng(0))
    assert (out.revenue, out.welfare, out.utility, out.stop_time) == (0.0, 0.0, 0.0, 0)


def test_half_price_mean_revenue():
    m = RandomWalkModel(0.5)
    pol = respond(ConstantPPP(0.5), RN, m)
    out = simulate_batch(ConstantPPP(0.5), pol, m, np.full(100_000, 0.5),
                         np.random.default_rng(1))
    assert out.revenue.mean() == pytest.approx(1.5, abs=0.02)
    assert 0.5 * A.absorption_time(0.5, 0.5) == 1.5


def test_revenue_is_sum_of_prices():
    scheme = FreeTrialPPP(3, 0.4)
    out = simulate_batch(scheme, respond(scheme, INF, W), W, np.full(500, 0.7),
                         np.random.default_rng(2))
    # Myopic buys every usage while value ≥ 0.4; trial usages are free
    paid = out.post_trial_duration
    assert np.allclose(out.revenue, 0.4 * paid)
    assert np.all(out.stop_time >= np.minimum(3, out.stop_time))
    assert np.allclose(out.utility, out.welfare - out.revenue)


def test_welfare_clipped_for_general_walk():
    g = GeneralMarkovModel((0.2, -0.2), (0.5, 0.5))
    out = simulate_batch(ConstantPPP(0.0), Threshold(0.0), g, np.full(2000, 0.9),
                         np.random.default_rng(3))
    assert np.all(out.welfare <= out.stop_time + 1e-9)


@pytest.mark.parametrize("F,target,tol", [(Uniform01(), 1 / 3, 0.003), (PowerCdf(2.0), 5 / 12, 0.005)])
def test_estimate_half_price(F, target, tol):
    est = estimate(ConstantPPP(0.5), RN, W, F, 200_000, 11)
    assert est.revenue.mean * 0.01 == pytest.approx(target, abs=tol)
    exact = closed_form_revenue(ConstantPPP(0.5), F, W, RN, exact_grid=True)
    assert est.revenue.contains(exact)
    assert est.capped_fraction == 0.0


def test_zero_price_revenue_is_zero():
    est = estimate(ConstantPPP(0.0), RN, W, Uniform01(), 5000, 1)
    assert est.revenue.mean == 0.0 and est.revenue.std_err == 0.0


def test_estimate_is_deterministic_and_worker_invariant():
    kw = dict(scheme=BuyItNow(40.0), profile=RN, model=W, F=Uniform01(),
              n_samples=CHUNK + 5000, master_seed=99)
    a = estimate(**kw).to_dict()
    b = estimate(**kw).to_dict()
    c = estimate(**kw, workers=2).to_dict()
    assert a == b == c
    assert estimate(**{**kw, "master_seed": 100}).to_dict() != a


def test_estimate_preconditions():
    with pytest.raises(DomainError):
        estimate(ConstantPPP(0.5), RN, W, Uniform01(), 999, 1)
    with pytest.raises(DomainError):
        estimate(ConstantPPP(0.5), RN, W, Uniform01(), 1000, None)


def test_capped_warning():
    with pytest.warns(RuntimeWarning, match="usage cap"):
        est = estimate(ConstantPPP(0.5), RN, W, PointMass(1.0), 1000, 1, cap=5)
    assert est.capped_fraction == 1.0 and est.warnings


def test_estimate_result_interval():
    r = EstimateResult.from_samples(np.arange(10.0))
    assert r.mean == 4.5
    assert r.std_err == pytest.approx(np.std(np.arange(10.0), ddof=1) / math.sqrt(10))
    assert r.ci_high - r.mean == pytest.approx(r.mean - r.ci_low)
    assert r.contains(4.5) and not r.contains(100.0)


def test_chunk_seeding():
    a = chunk_rng(5, 3).random(4)
    assert np.array_equal(a, chunk_rng(5, 3).random(4))
    assert not np.array_equal(a, chunk_rng(5, 4).random(4))
    out = run_outcomes(ConstantPPP(0.5), Threshold(0.0), W, Uniform01(), 2000, 5)
    assert len(out) == 2000


def test_infinitely_averse_paths_never_lose():
    for scheme in (ConstantPPP(0.3), ConstantPPP(0.6), recommended_free_trial_ppp(W)):
        out = run_outcomes(scheme, respond(scheme, INF, W), W, Uniform01(), 1_000_000 // 3, 7)
        assert out.utility.min() >= -1e-9


def test_alpha_buyer_loss_within_budget():
    alpha = 2.0
    scheme = ConstantPPP(0.6)
    out = run_outcomes(scheme, respond(scheme, RiskProfile(alpha), W), W, Uniform01(),
                       50_000, 8)
    assert out.utility.min() >= -1 / alpha - 1e-9
    s = RentToOwn(0.3, 40)
    out = run_outcomes(s, respond(s, RiskProfile(alpha), W), W, Uniform01(), 50_000, 9)
    assert out.utility.min() >= -1 / alpha - 1e-9
    assert out.revenue.max() <= 0.3 * 40 + 1e-9


def test_tail_bounds():
    for k, bound in ((2, 0.5), (4, 0.25), (6, 0.125)):
        r = tail_probability_check(0.5, 0.1, k, 100_000, chunk_rng(1, k))
        assert r.bound == bound and r.passed
    with pytest.raises(DomainError):
        tail_probability_check(0.5, 0.1, 1, 1000, chunk_rng(1, 0))


def test_free_trial_checks():
    r = free_trial_bounds_check("ppp", 1.0, 0.1, 20_000, chunk_rng(2, 0))
    assert r.lower_bound == pytest.approx(0.7265, abs=1e-3) and r.passed
    r = free_trial_bounds_check("bin", 1.0, 0.1, 20_000, chunk_rng(2, 1))
    assert r.lower_bound == pytest.approx(0.1528, abs=1e-3) and r.passed
    r = free_trial_bounds_check("ppp", 0.0, 0.1, 20_000, chunk_rng(2, 2))
    assert r.lower_bound == 0.0 and r.passed
    with pytest.raises(DomainError):
        free_trial_bounds_check("rto", 0.5, 0.1, 1000, chunk_rng(2, 3))


def test_measure_general_walk_symmetric():
    # immediate reflection of the ±δ law reproduces the grid walk exactly
    g = GeneralMarkovModel.symmetric(0.1, reflection="immediate")
    s = measure_general_walk(g, 0.5, 40_000, chunk_rng(3, 0))
    mean, se, n = s["hit_one"]
    assert abs(mean - 0.5) < 4 * se
    mean, se, _ = s["exit_time"]
    assert abs(mean - 25.0) < 4 * se
    mean, se, _ = s["time_to_one"]
    assert abs(mean - A.conditional_time_to_one(0.5, 0.1)) < 4 * se
    mean, se, _ = s["cumulative_value"]
    assert abs(mean - A.cumulative_value(0.5, 0.1)) < 4 * se
    assert s["truncated"] == 0
    with pytest.raises(DomainError):
        measure_general_walk(g, 1.0, 10, chunk_rng(3, 1))


def test_excursion_rule_collects_more_value():
    exc = GeneralMarkovModel.symmetric(0.1)
    s = measure_general_walk(exc, 0.5, 40_000, chunk_rng(3, 2))
    mean, se, _ = s["cumulative_value"]
    assert mean > A.cumulative_value(0.5, 0.1) + 4 * se


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
def test_outcome_invariants(p, seed):
    scheme = ConstantPPP(p)
    out = simulate_batch(scheme, respond(scheme, RN, W), W, np.random.default_rng(seed).random(200),
                         np.random.default_rng(seed))
    assert np.allclose(out.revenue, p * out.stop_time)
    assert np.all(out.welfare <= out.stop_time + 1e-9)
    assert np.all(out.max_drawdown >= 0)
