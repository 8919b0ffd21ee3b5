import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ppplab.distributions import (PiecewiseTable, PointMass, PowerCdf, Uniform01, eval_cdf,
                                  monopoly_price, myerson_revenue, sample, virtual_value)
from ppplab.errors import DomainError, UndefinedDensityError

CONTINUOUS = [Uniform01(), PowerCdf(2.0), PowerCdf(0.5),
              PiecewiseTable((0.0, 0.3, 0.7, 1.0), (0.0, 0.5, 0.6, 1.0))]
ALL = CONTINUOUS + [PointMass(0.4), PointMass(1.0)]


def test_eval_cdf_examples():
    assert eval_cdf(Uniform01(), 0.3) == pytest.approx(0.3)
    assert eval_cdf(PowerCdf(2), 0.5) == pytest.approx(0.25)
    assert eval_cdf(PointMass(0.7), 0.5) == 0.0
    assert eval_cdf(PointMass(0.7), 0.7) == 1.0


@pytest.mark.parametrize("x", [-0.1, 1.2, math.nan])
def test_eval_cdf_rejects_outside_unit(x):
    with pytest.raises(DomainError):
        eval_cdf(Uniform01(), x)


def test_table_interpolates():
    d = PiecewiseTable((0.0, 0.5, 1.0), (0.0, 0.8, 1.0))
    assert d.cdf(0.25) == pytest.approx(0.4)
    assert d.pdf(0.75) == pytest.approx(0.4)


@pytest.mark.parametrize("x,F", [((0.0, 0.5, 0.5, 1.0), (0, 0.2, 0.3, 1)),
                                 ((0.1, 1.0), (0, 1)),
                                 ((0.0, 1.0), (0, 0.9)),
                                 ((0.0, 0.5, 1.0), (0, 0.6, 0.4))])
def test_table_validation(x, F):
    with pytest.raises(DomainError):
        PiecewiseTable(x, F)


@pytest.mark.parametrize("d", CONTINUOUS, ids=lambda d: repr(d))
def test_cdf_invariants(d):
    x = np.linspace(0, 1, 2001)
    F = d.cdf(x)
    assert np.all(np.diff(F) >= -1e-15)
    assert F[0] == pytest.approx(0.0) and F[-1] == pytest.approx(1.0)
    # density integrates to one; breakpoints are passed so kinks do not hurt
    pts = getattr(d, "x", None)
    mass = integrate.quad(d.pdf, 0, 1, points=pts[1:-1] if pts else None)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_point_mass_has_no_density():
    with pytest.raises(UndefinedDensityError):
        PointMass(0.5).pdf(0.5)


def test_point_mass_sampling_is_degenerate():
    rng = np.random.default_rng(0)
    assert np.all(sample(PointMass(0.7), rng, 1000) == 0.7)


@pytest.mark.parametrize("d,mean", [(Uniform01(), 0.5), (PowerCdf(2.0), 2 / 3)])
def test_sampling_matches_law(d, mean):
    rng = np.random.default_rng(12345)
    x = sample(d, rng, 100_000)
    assert x.mean() == pytest.approx(mean, abs=0.005)
    ks = stats.kstest(x, lambda t: d.cdf(np.clip(t, 0, 1))).statistic
    assert ks < 0.01


def test_sampling_is_seeded():
    a = sample(PowerCdf(3.0), np.random.default_rng(7), 50)
    b = sample(PowerCdf(3.0), np.random.default_rng(7), 50)
    assert np.array_equal(a, b)


def test_power_mean_by_quadrature():
    # E[V] = ∫ (1 - F)
    d = PowerCdf(2.0)
    assert integrate.quad(lambda x: 1 - d.cdf(x), 0, 1)[0] == pytest.approx(d.mean)


def test_virtual_value_examples():
    assert virtual_value(Uniform01(), 0.75) == pytest.approx(0.5)
    assert virtual_value(Uniform01(), 0.5) == pytest.approx(0.0)
    assert virtual_value(PowerCdf(2.0), 1.0) == pytest.approx(1.0)


def test_virtual_value_against_numeric_derivative():
    d = PowerCdf(2.0)
    x, h = 0.6, 1e-6
    f = (d.cdf(x + h) - d.cdf(x - h)) / (2 * h)
    assert virtual_value(d, x) == pytest.approx(x - (1 - d.cdf(x)) / f, rel=1e-6)


def test_virtual_value_zero_density():
    d = PiecewiseTable((0.0, 0.5, 1.0), (0.0, 1.0, 1.0))
    with pytest.raises(UndefinedDensityError):
        virtual_value(d, 0.75)


def test_monopoly_examples():
    assert monopoly_price(Uniform01()) == pytest.approx(0.5, abs=1e-8)
    assert monopoly_price(PowerCdf(2.0)) == pytest.approx(1 / math.sqrt(3), abs=1e-7)
    assert monopoly_price(PointMass(0.4)) == pytest.approx(0.4)
    assert myerson_revenue(Uniform01()) == pytest.approx(0.25)
    assert myerson_revenue(PowerCdf(2.0)) == pytest.approx(2 / (3 * math.sqrt(3)), abs=1e-9)
    assert myerson_revenue(PointMass(0.4)) == pytest.approx(0.4)


@pytest.mark.parametrize("d", ALL, ids=lambda d: repr(d))
def test_monopoly_price_beats_grid(d):
    p = monopoly_price(d)
    rev = myerson_revenue(d)
    assert rev == pytest.approx(p * d.survival(p))
    g = np.linspace(0, 1, 10_001)
    assert np.max(g * d.survival(g)) <= rev + 1e-6
    assert rev <= d.mean + 1e-12


@pytest.mark.parametrize("d", [Uniform01(), PowerCdf(2.0), PowerCdf(3.0)])
def test_virtual_value_vanishes_at_monopoly_price(d):
    assert abs(virtual_value(d, monopoly_price(d))) < 1e-4


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0.01, 0.99))
def test_power_virtual_value_monotone(k, x):
    d = PowerCdf(k)
    assert virtual_value(d, min(x + 0.01, 1.0)) >= virtual_value(d, x) - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5))
def test_table_cdf_monotone_and_quantile_inverts(incs):
    cum = np.cumsum(np.array(incs) + 1e-3)
    Fs = np.concatenate([[0.0], cum / cum[-1]])
    xs = np.linspace(0, 1, len(Fs))
    d = PiecewiseTable(tuple(xs), tuple(Fs))
    u = np.linspace(0.01, 0.99, 33)
    assert np.allclose(d.cdf(d.ppf(u)), u, atol=1e-9)
    x = np.linspace(0, 1, 101)
    assert np.all(np.diff(d.cdf(x)) >= -1e-15)
