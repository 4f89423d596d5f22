from unittest import mock

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from netanomaly import nulls
from netanomaly.generators import generate_weighted_er
from netanomaly.graph import from_edges
from netanomaly.nulls import (
    NullEnsemble,
    configuration_replica,
    monte_carlo_p,
    p_to_score,
    resample_replica_with_min_size,
    stub_matching,
)


def test_two_node_replica_is_forced():
    g = from_edges(2, [(0, 1, 5.0)])
    r = configuration_replica(g, np.random.default_rng(0))
    assert (r.n, list(r.src), list(r.dst), list(r.weight)) == (2, [0], [1], [5.0])


def test_stub_matching_preserves_degrees_and_weights():
    g = generate_weighted_er(200, 0.03, seed=4)
    s, d, w = stub_matching(g, np.random.default_rng(1))
    np.testing.assert_array_equal(np.bincount(s, minlength=200), g.degrees()[1])
    np.testing.assert_array_equal(np.bincount(d, minlength=200), g.degrees()[0])
    np.testing.assert_array_equal(np.sort(w), np.sort(g.weight))


def test_cleanup_leaves_simple_graph():
    g = generate_weighted_er(60, 0.2, seed=2)
    for i in range(10):
        r = configuration_replica(g, np.random.default_rng(i))
        assert not np.any(r.src == r.dst)
        assert len(np.unique(r.src * r.n + r.dst)) == r.m
        assert set(np.round(r.weight, 12)) <= set(np.round(g.weight, 12))


def test_ensemble_replicas_depend_only_on_seed_and_index():
    g = generate_weighted_er(80, 0.05, seed=3)
    a = NullEnsemble.build(g, 4, seed=9, stream=2)
    b = NullEnsemble.build(g, 6, seed=9, stream=2)
    for x, y in zip(a.replicas, b.replicas):
        np.testing.assert_array_equal(x.src, y.src)
        np.testing.assert_array_equal(x.weight, y.weight)


def test_monte_carlo_p():
    null = np.arange(500.0)
    assert monte_carlo_p(1000, null) == 1 / 501
    assert monte_carlo_p(-1, null) == 1.0
    tied = np.r_[np.zeros(490), np.full(10, 7.0)]
    assert monte_carlo_p(7.0, tied) == pytest.approx(11 / 501)
    assert monte_carlo_p(-5, null, "lower") == 1 / 501


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.floats(-1e6, 1e6))
@settings(max_examples=200, deadline=None)
def test_monte_carlo_p_matches_counting(null, obs):
    up = (1 + sum(x >= obs for x in null)) / (len(null) + 1)
    lo = (1 + sum(x <= obs for x in null)) / (len(null) + 1)
    assert monte_carlo_p(obs, null) == pytest.approx(up)
    assert monte_carlo_p(obs, null, "lower") == pytest.approx(lo)


def test_p_to_score():
    assert p_to_score(0.5) == 0
    assert p_to_score(0.05) == 0
    assert p_to_score(0.01) == pytest.approx(stats.norm.ppf(0.99), abs=1e-12)
    assert p_to_score(0.01) == pytest.approx(2.3263, abs=1e-4)


def test_resample_keeps_first_large_replica():
    g = generate_weighted_er(40, 0.2, seed=0)
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    first = configuration_replica(g, rng_a)
    kept = resample_replica_with_min_size(g, 3, rng_b)
    np.testing.assert_array_equal(first.src, kept.src)


def test_resample_accepts_tenth_attempt_with_three_nodes():
    sizes = iter([1] * 9 + [3] + [50])
    g = from_edges(3, [(0, 1, 1.0)])
    fake = lambda graph, rng: from_edges(next(sizes), [])  # noqa: E731
    with mock.patch.object(nulls, "configuration_replica", fake):
        r = resample_replica_with_min_size(g, 20, np.random.default_rng(0))
    assert r.n == 3


def test_resample_gives_up():
    g = from_edges(2, [(0, 1, 1.0)])
    with pytest.raises(nulls.ResamplingError):
        resample_replica_with_min_size(g, 5, np.random.default_rng(0), max_attempts=30)
