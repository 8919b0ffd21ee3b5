import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ppplab.errors import DomainError, GridError
from ppplab.process import (BinaryValueModel, DeterministicStop, GeneralMarkovModel,
                            GeometricStop, LinearMean, RandomWalkModel, TableStop, default_cap,
                            sample_trajectory, step_binary, step_general, step_walk)


@pytest.mark.parametrize("delta", [0.3, 0.0, 0.6, -0.1])
def test_walk_rejects_bad_delta(delta):
    with pytest.raises(DomainError):
        RandomWalkModel(delta)


def test_step_walk_boundaries():
    m = RandomWalkModel(0.1)
    rng = np.random.default_rng(0)
    assert all(step_walk(m, 1.0, rng) == pytest.approx(0.9) for _ in range(20))
    assert step_walk(m, 0.0, rng) == 0.0
    with pytest.raises(GridError):
        step_walk(m, 0.55, rng)


def test_step_walk_is_fair():
    m = RandomWalkModel(0.1)
    rng = np.random.default_rng(1)
    ups = sum(step_walk(m, 0.5, rng) > 0.5 for _ in range(100_000))
    assert ups / 100_000 == pytest.approx(0.5, abs=0.005)


def test_step_binary_deterministic():
    m = BinaryValueModel(DeterministicStop(LinearMean(0.0, 5.0)))
    rng = np.random.default_rng(0)
    assert step_binary(m, 0.4, 4, rng) == 0.4
    assert step_binary(m, 0.4, 5, rng) == 0.0


def test_geometric_mean_stop():
    m = BinaryValueModel(GeometricStop(LinearMean(10.0, 0.0)))
    rng = np.random.default_rng(3)
    t = np.array([sample_trajectory(m, 0.5, rng=rng).stop_time for _ in range(100_000)])
    assert t.mean() == pytest.approx(5.0, abs=0.05)
    assert sample_trajectory(m, 0.0, rng=rng).stop_time == 0


def test_geometric_below_one_mean():
    law = GeometricStop(LinearMean(10.0, 0.0))
    t = law.sample(np.full(200_000, 0.05), np.random.default_rng(4))
    assert t.mean() == pytest.approx(0.5, abs=0.01)
    assert set(np.unique(t)) == {0, 1}


def test_table_stop():
    law = TableStop((0.0, 0.5, 1.0), (1, 3), ((1.0, 0.0), (0.25, 0.75)))
    assert law.expected(0.2) == pytest.approx(1.0)
    assert law.expected(0.8) == pytest.approx(2.5)
    t = law.sample(np.full(100_000, 0.8), np.random.default_rng(0))
    assert t.mean() == pytest.approx(2.5, abs=0.02)
    BinaryValueModel(law)


def test_binary_requires_monotone_mean():
    with pytest.raises(DomainError):
        BinaryValueModel(DeterministicStop(LinearMean(-5.0, 10.0)))


def test_step_general_reflection_rules():
    one = GeneralMarkovModel((0.03, -0.03), (0.5, 0.5), reflection="immediate")
    assert one.next_value(0.97, 0.99, 0.03) == pytest.approx(0.97)
    assert one.next_value(0.97, 0.99, -0.03) == pytest.approx(0.96)
    rng = np.random.default_rng(0)
    outs = {round(step_general(one, 0.97, 0.99, rng), 9) for _ in range(50)}
    assert outs == {0.97, 0.96}
    assert step_general(one, 0.04, 0.01, rng) in (0.0, pytest.approx(0.04))
    exc = GeneralMarkovModel((0.03, -0.03), (0.5, 0.5))
    assert exc.next_value(0.97, 0.99, 0.03) == pytest.approx(1.02)
    assert exc.next_value(0.99, 1.02, -0.03) == pytest.approx(0.99)
    assert exc.next_value(0.03, 0.01, -0.03) == 0.0


def test_general_model_moments():
    m = GeneralMarkovModel.skewed(0.05)
    assert m.epsilon == pytest.approx(0.1)
    assert m.delta_sq == pytest.approx(2 * 0.05 ** 2)
    assert m.c3 == pytest.approx(-2 * 0.05 ** 3)
    x = m.sample_increments(np.random.default_rng(9), 1_000_000)
    assert abs(x.mean()) <= 3 * x.std() / 1000
    assert np.max(np.abs(x)) <= m.epsilon


def test_general_model_validation():
    with pytest.raises(DomainError):
        GeneralMarkovModel((0.1, -0.1), (0.6, 0.4))
    with pytest.raises(DomainError):
        GeneralMarkovModel((0.1, -0.1), (0.5, 0.5), reflection="mirror")


def test_symmetric_general_matches_walk_in_interior():
    rng = np.random.default_rng(5)
    g = GeneralMarkovModel.symmetric(0.1)
    w = RandomWalkModel(0.1)
    a = [step_general(g, 0.5, 0.5, rng) for _ in range(20_000)]
    b = [step_walk(w, 0.5, rng) for _ in range(20_000)]
    assert stats.ks_2samp(np.round(a, 9), np.round(b, 9)).pvalue > 1e-3


def test_walk_trajectory_mean_stop():
    m = RandomWalkModel(0.5)
    rng = np.random.default_rng(11)
    t = np.array([sample_trajectory(m, 0.5, rng=rng).stop_time for _ in range(100_000)])
    assert t.mean() == pytest.approx(3.0, abs=0.05)


def test_binary_trajectory_values():
    m = BinaryValueModel(DeterministicStop(LinearMean(0.0, 5.0)))
    tr = sample_trajectory(m, 0.4, rng=np.random.default_rng(0))
    assert tr.values == [0.4] * 5 and tr.stop_time == 5 and tr.absorbed


def test_cap_semantics():
    m = RandomWalkModel(0.1)
    tr = sample_trajectory(m, 1.0, cap=10, rng=np.random.default_rng(0))
    assert tr.capped and not tr.absorbed and tr.stop_time == 10 and len(tr.values) == 10
    with pytest.raises(DomainError):
        sample_trajectory(m, 0.5, cap=0, rng=np.random.default_rng(0))


def test_absorption_before_default_cap():
    m = RandomWalkModel(0.1)
    rng = np.random.default_rng(2)
    cap = default_cap(m, 0.5)
    assert cap == 50 * 75
    capped = sum(sample_trajectory(m, 0.5, rng=rng).capped for _ in range(2000))
    assert capped / 2000 < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([0.5, 0.25, 0.2, 0.1]), st.integers(0, 10), st.integers(0, 2 ** 31))
def test_walk_paths_stay_on_grid(delta, k, seed):
    m = RandomWalkModel(delta)
    v0 = min(k, m.n) / m.n
    tr = sample_trajectory(m, v0, cap=500, rng=np.random.default_rng(seed))
    assert all(m.on_grid(v) and 0 < v <= 1 for v in tr.values)
    assert np.all(np.abs(np.diff(tr.values)) <= delta + 1e-12)
    if tr.absorbed:
        assert tr.stop_time == len(tr.values)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
def test_binary_paths_take_one_value(v0, seed):
    m = BinaryValueModel(GeometricStop(LinearMean(10.0, 1.0)))
    tr = sample_trajectory(m, v0, rng=np.random.default_rng(seed))
    assert set(tr.values) <= {v0}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_trajectories_are_deterministic(seed):
    m = GeneralMarkovModel.skewed(0.05)
    a = sample_trajectory(m, 0.5, rng=np.random.default_rng(seed))
    b = sample_trajectory(m, 0.5, rng=np.random.default_rng(seed))
    assert a == b
    assert all(0 < v < 1 + m.epsilon for v in a.values)


def test_snap_index_preserves_mean():
    m = RandomWalkModel(0.1)
    idx = m.snap_index(np.full(200_000, 0.537), np.random.default_rng(0))
    assert (idx / m.n).mean() == pytest.approx(0.537, abs=1e-3)
    assert set(np.unique(idx)) == {5, 6}
    assert np.all(m.snap_index(np.full(5, 0.3), np.random.default_rng(0)) == 3)
