import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ppplab import analytics as A
from ppplab.distributions import (PiecewiseTable, PointMass, PowerCdf, Uniform01,
                                  monopoly_price, myerson_revenue)
from ppplab.errors import DomainError, NotClosedFormError, UnsupportedError
from ppplab.process import (BinaryValueModel, DeterministicStop, GeometricStop, LinearMean,
                            RandomWalkModel)
from ppplab.schemes import (BuyItNow, ConstantPPP, FreeTrialBIN, FreeTrialPPP, PriceSequence,
                            RentToOwn, alpha_ppp_scheme, bcm_dominating_price,
                            closed_form_metrics, closed_form_revenue, optimal_bin,
                            optimal_constant_ppp, price_at, recommended_free_trial_bin,
                            recommended_free_trial_ppp, rent_to_own_params)
from ppplab.strategy import RiskProfile

W = RandomWalkModel(0.1)
RN, INF = RiskProfile(0.0), RiskProfile(math.inf)
GEO = BinaryValueModel(GeometricStop(LinearMean(10.0, 0.0)))


def test_price_at_examples():
    assert price_at(FreeTrialPPP(5, 0.1), 5) == 0.0
    assert price_at(FreeTrialPPP(5, 0.1), 6) == pytest.approx(0.1)
    assert price_at(RentToOwn(0.5, 3), 3) == 0.5
    assert price_at(RentToOwn(0.5, 3), 4) == 0.0
    assert price_at(RentToOwn(0.5, None), 10 ** 6) == 0.5
    assert price_at(BuyItNow(3.0), 1) == 3.0 and price_at(BuyItNow(3.0), 2) == 0.0
    assert price_at(FreeTrialBIN(2, 7.0), 3) == 7.0 and price_at(FreeTrialBIN(2, 7.0), 2) == 0.0
    seq = PriceSequence((0.1, 0.2), 0.3)
    assert [price_at(seq, t) for t in (1, 2, 3, 100)] == [0.1, 0.2, 0.3, 0.3]
    with pytest.raises(DomainError):
        price_at(seq, 0)


@pytest.mark.parametrize("build", [lambda: ConstantPPP(-0.1), lambda: BuyItNow(math.nan),
                                   lambda: FreeTrialPPP(-1, 0.1), lambda: FreeTrialBIN(1.5, 1.0),
                                   lambda: RentToOwn(0.1, -2), lambda: PriceSequence((0.1, -1))])
def test_scheme_validation(build):
    with pytest.raises(DomainError):
        build()


def test_recommended_free_trials():
    s = recommended_free_trial_ppp(0.1)
    assert (s.trial_length, s.price) == (67, 0.089)
    assert recommended_free_trial_ppp(0.05).trial_length == 267
    ts = [recommended_free_trial_ppp(d).trial_length for d in (0.05, 0.1, 0.125, 0.25, 0.5)]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    b = recommended_free_trial_bin(W)
    assert (b.trial_length, b.price) == (38, pytest.approx(25.0))
    b = recommended_free_trial_bin(0.5)
    assert (b.trial_length, b.price) == (2, pytest.approx(1.0))
    for d in (0.5, 0.25, 0.1, 0.05):
        assert recommended_free_trial_bin(d).price * d * d == pytest.approx(0.25)


def test_rent_to_own_params():
    for alpha in (1e-3, 0.01, 1.0, 100.0, 1e4):
        s = rent_to_own_params(alpha, 0.5, 0.1)
        assert s.price * s.paid_rounds <= 1 / alpha + s.price + 1e-12
    cv = A.cumulative_value(0.5, 0.1)
    big = rent_to_own_params(1e4, 0.5, 0.1)
    assert big.price == pytest.approx(1 / (24 * 1e4 * cv))
    assert big.paid_rounds == math.ceil(24 * cv)
    assert rent_to_own_params(1e-4, 0.5, 0.1).price == 0.5
    for alpha in (0.0, math.inf):
        with pytest.raises(UnsupportedError):
            rent_to_own_params(alpha, 0.5, 0.1)
    with pytest.raises(DomainError):
        rent_to_own_params(1.0, 0.0, 0.1)


def test_alpha_ppp_scheme_cases():
    low = alpha_ppp_scheme(0.01, Uniform01(), W)
    assert low.paid_rounds is not None and low.price < 0.5
    mid = alpha_ppp_scheme(1.0, Uniform01(), W)
    v_star = optimal_bin(Uniform01(), W, RiskProfile(1.0)).threshold
    assert mid.paid_rounds is None and mid.price == pytest.approx(v_star / 2)
    assert alpha_ppp_scheme(0.0, Uniform01(), W) == RentToOwn(0.5, None)
    assert alpha_ppp_scheme(math.inf, Uniform01(), W) == RentToOwn(0.25, None)


# optimal BIN: frozen values from polynomial roots of d/dt [C(t)(1 − F(t))]
@pytest.mark.parametrize("F,threshold,scaled", [
    (Uniform01(), 0.4592541661543619, 0.23170809882504473),
    (PowerCdf(2.0), 0.532585683691107, 0.3467184982157274),
])
def test_optimal_bin_risk_neutral(F, threshold, scaled):
    opt = optimal_bin(F, W, RN)
    assert opt.threshold == pytest.approx(threshold, abs=1e-7)
    assert opt.revenue * 0.01 == pytest.approx(scaled, abs=1e-10)
    assert opt.price == pytest.approx(A.cumulative_value(opt.threshold, 0.1))


@pytest.mark.parametrize("F,threshold,scaled", [
    (Uniform01(), 0.6511884584284247, 0.0853132432061724),
    (PowerCdf(2.0), 0.6955412546509255, 0.1428211149728011),
])
def test_optimal_bin_infinitely_averse(F, threshold, scaled):
    opt = optimal_bin(F, W, INF)
    assert opt.threshold == pytest.approx(threshold, abs=1e-7)
    assert opt.revenue * 0.1 == pytest.approx(scaled, abs=1e-10)


def test_worst_case_approximation_optimum():
    # the v²/(2δ) curve is maximized at 2/3 with δ·revenue 2/27
    t = np.linspace(0, 1, 100_001)
    r = A.worst_case_cumulative_approx(t, 0.1) * (1 - t) * 0.1
    assert t[np.argmax(r)] == pytest.approx(2 / 3, abs=1e-4)
    assert r.max() == pytest.approx(2 / 27, abs=1e-9)


def test_optimal_bin_resolution_floor():
    with pytest.raises(DomainError):
        optimal_bin(Uniform01(), W, RN, resolution=999)


@pytest.mark.parametrize("F", [Uniform01(), PowerCdf(2.0), PowerCdf(0.5), PointMass(0.6),
                               PiecewiseTable((0.0, 0.4, 1.0), (0.0, 0.7, 1.0))],
                         ids=lambda d: d.kind)
@pytest.mark.parametrize("delta", [0.25, 0.1, 0.05])
def test_optimal_bin_band(F, delta):
    m = RandomWalkModel(delta)
    scaled = optimal_bin(F, m, RN).revenue * delta ** 2
    mye = myerson_revenue(F)
    assert 2 / 3 * mye - 1e-9 <= scaled <= (1 + delta ** 2 / 3) * mye + 1e-9
    assert scaled <= 1.25 * mye


def test_optimal_constant_ppp_examples():
    p, r = optimal_constant_ppp(Uniform01(), W, RN)
    assert p == pytest.approx(0.5) and r * 0.01 == pytest.approx(1 / 3, abs=1e-9)
    p, r = optimal_constant_ppp(PowerCdf(2.0), W, RN)
    assert p == pytest.approx(0.5) and r * 0.01 == pytest.approx(5 / 12, abs=1e-9)
    for v in (0.3, 0.5, 1.0):
        _, r = optimal_constant_ppp(PointMass(v), W, INF)
        assert r <= v * v / 0.01


def test_closed_form_ppp_by_quadrature():
    # risk neutral at p = ½: p·E[T(V)] with T(v) = v(2 − v)/δ²
    for F in (Uniform01(), PowerCdf(2.0), PowerCdf(3.0)):
        direct = integrate.quad(lambda v: 0.5 * v * (2 - v) / 0.01 * F.pdf(v), 0, 1)[0]
        assert closed_form_revenue(ConstantPPP(0.5), F, W, RN) == pytest.approx(direct, rel=1e-8)


def test_closed_form_infinitely_averse_ppp():
    # p·∫_p^1 h_{v,p} f(v) dv
    p = 0.3
    direct = integrate.quad(lambda v: p * A.reflected_hit_time(v, p, 0.1), p, 1)[0]
    assert closed_form_revenue(ConstantPPP(p), Uniform01(), W, INF) == pytest.approx(direct,
                                                                                    rel=1e-8)


def test_closed_form_bin_matches_threshold_formula():
    price = 40.0
    m = closed_form_metrics(BuyItNow(price), Uniform01(), W, RN)
    # lowest accepting type solves C(t) = price
    t = A.cumulative_value(np.linspace(0, 1, 1_000_001), 0.1)
    cut = np.linspace(0, 1, 1_000_001)[np.argmax(t >= price)]
    assert m.revenue == pytest.approx(price * (1 - cut), rel=1e-5)
    wel = integrate.quad(lambda v: A.cumulative_value(v, 0.1), cut, 1)[0]
    assert m.welfare == pytest.approx(wel, rel=1e-5)


def test_half_monopoly_ppp_chain_bound():
    mu = monopoly_price(Uniform01())
    r = closed_form_revenue(ConstantPPP(mu / 2), Uniform01(), W, INF)
    assert r >= mu / (8 * 0.01) * myerson_revenue(Uniform01())


@pytest.mark.parametrize("scheme", [FreeTrialPPP(5, 0.1), RentToOwn(0.3, 10),
                                    PriceSequence((0.2,))])
def test_not_closed_form(scheme):
    with pytest.raises(NotClosedFormError):
        closed_form_revenue(scheme, Uniform01(), W, RN)


def test_not_closed_form_intermediate_alpha():
    with pytest.raises(NotClosedFormError):
        closed_form_revenue(ConstantPPP(0.6), Uniform01(), W, RiskProfile(1.0))


def test_exact_grid_half_price():
    # lattice expectation of ½·T(V) for uniform V0: (1/3 − δ²/12)/δ²
    for d in (0.5, 0.25, 0.1):
        m = RandomWalkModel(d)
        r = closed_form_revenue(ConstantPPP(0.5), Uniform01(), m, RN, exact_grid=True)
        assert r * d * d == pytest.approx(1 / 3 - d * d / 12, abs=1e-9)


def test_binary_dominance_instance():
    opt = optimal_bin(Uniform01(), GEO, RN)
    assert opt.threshold == pytest.approx(2 / 3, abs=1e-7)
    assert opt.revenue == pytest.approx(40 / 27, abs=1e-7)
    ppp = closed_form_metrics(ConstantPPP(2 / 3), Uniform01(), GEO, RN)
    binm = closed_form_metrics(BuyItNow(opt.price), Uniform01(), GEO, RN)
    assert ppp.revenue == pytest.approx(50 / 27, abs=1e-7)
    assert ppp.welfare == pytest.approx(binm.welfare, abs=1e-7)
    # (2/3)·10·∫_{2/3}^1 v dv
    assert ppp.revenue == pytest.approx(2 / 3 * 10 * integrate.quad(lambda v: v, 2 / 3, 1)[0])


def test_bcm_dominating_price():
    p, rep = bcm_dominating_price(Uniform01(), GEO)
    assert rep.found and not rep.fallback and rep.dominates
    assert p <= 2 / 3
    assert p == pytest.approx(0.5489, abs=1e-4)
    nxt = closed_form_metrics(ConstantPPP(p + 1e-4), Uniform01(), GEO, RN)
    assert nxt.utility < rep.bin_metrics.utility or nxt.revenue < rep.bin_metrics.revenue
    assert rep.to_dict()["dominates"]


def test_bcm_point_mass_full_surplus():
    det = BinaryValueModel(DeterministicStop(LinearMean(0.0, 5.0)))
    p, rep = bcm_dominating_price(PointMass(0.4), det)
    assert p == pytest.approx(0.4)
    assert rep.ppp.revenue == pytest.approx(2.0) and rep.ppp.utility == pytest.approx(0.0)
    assert rep.bin_metrics.utility == pytest.approx(0.0)


def test_bcm_requires_binary():
    with pytest.raises(UnsupportedError):
        bcm_dominating_price(Uniform01(), W)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.5))
def test_low_prices_sell_to_everyone(p):
    r = closed_form_revenue(ConstantPPP(p), Uniform01(), W, RN)
    assert r == pytest.approx(p * (2 / 3) / 0.01, rel=1e-8, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 80.0))
def test_metrics_are_consistent(p, bin_price):
    for scheme, prof in ((ConstantPPP(p), RN), (ConstantPPP(p), INF), (BuyItNow(bin_price), RN)):
        m = closed_form_metrics(scheme, Uniform01(), W, prof)
        assert m.revenue >= -1e-12 and m.welfare >= -1e-12
        assert m.utility == pytest.approx(m.welfare - m.revenue)
        if prof is INF:
            assert m.utility >= -1e-9
