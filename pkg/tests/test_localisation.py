import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from netanomaly.generators import generate_weighted_er
from netanomaly.graph import from_edges
from netanomaly.localisation import (
    FEATURE_NAMES,
    _direct_count,
    column_stats,
    direct_loc_count,
    direct_loc_members,
    exp_stat,
    ipr,
    localisation_features,
    sign_stat,
)


def test_ipr_values():
    assert ipr([1, 0, 0]) == 1
    assert ipr(np.full(10_000, 0.01)) == pytest.approx(1e-4)
    assert ipr([math.sqrt(0.5)] * 2) == pytest.approx(0.5)


def test_exp_stat_values():
    assert exp_stat([1.0]) == pytest.approx(math.e - 2, abs=1e-12)
    assert exp_stat([1.0, 0.0, 0.0]) == pytest.approx(math.e - 2, abs=1e-12)
    assert exp_stat(np.full(10_000, 0.01)) == pytest.approx(0.50167, abs=5e-5)


def test_sign_stat_values():
    assert sign_stat([1, -1, -1, -1], 4) == 0.25
    assert sign_stat(np.ones(10), 9) == 1.0
    assert sign_stat([1, 2, 3, -1, -2, -3], 6) == 0.5


def brute_direct(v, basis):
    """Smallest subset reaching 90% of the basis sum (the heaviest one of that
    size), plus the entries tied with its smallest member."""
    b = np.asarray(v) ** 4 if basis == "fourth_power" else np.abs(v)
    total = b.sum()
    for size in range(1, len(b) + 1):
        best = max(itertools.combinations(range(len(b)), size), key=lambda s: b[list(s)].sum())
        if b[list(best)].sum() >= 0.9 * total * (1 - 1e-12):
            return int(np.sum(b >= b[list(best)].min()))
    return len(b)


def test_direct_localisation_examples():
    assert direct_loc_count([1, 0, 0, 0], "abs") == 1
    assert direct_loc_count(np.full(4, 0.5), "abs") == 4
    v = np.array([0.9, 0.3, 0.3, 0.1, 0.05, 0.02])
    v /= np.linalg.norm(v)
    for basis in ("fourth_power", "abs"):
        assert direct_loc_count(v, basis) == brute_direct(v, basis)


@given(arrays(np.float64, st.integers(1, 9), elements=st.floats(-1, 1, allow_nan=False)))
@settings(max_examples=200, deadline=None)
def test_direct_localisation_matches_subset_oracle(v):
    if not np.any(np.abs(v) > 1e-6):
        return
    v = np.round(v, 3)
    if not v.any():
        return
    for basis in ("fourth_power", "abs"):
        assert direct_loc_count(v, basis) == brute_direct(v, basis)
    assert _direct_count(np.abs(v), 0.9) == brute_direct(v, "abs")


def test_kernel_matches_python_path():
    vecs = np.random.default_rng(0).normal(size=(30, 7))
    vecs /= np.linalg.norm(vecs, axis=0)
    np.testing.assert_allclose(column_stats(vecs, 20, 0.9, 1e-12), column_stats.py_func(vecs, 20, 0.9, 1e-12))
    assert direct_loc_members(vecs[:, 0]).size == column_stats(vecs, 20, 0.9, 1e-12)[3, 0]


def planted_clique(seed=1):
    g = generate_weighted_er(60, 0.08, seed=seed)
    clique = list(range(8))
    edges = [(a, b, w) for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())
             if not (a in clique and b in clique)]
    edges += [(a, b, 1.0) for a in clique for b in clique if a < b]
    return from_edges(60, edges), clique


def test_planted_clique_exp_feature_positive_on_members():
    g, clique = planted_clique()
    res = localisation_features(g, seed=0, n_replicas=100)
    col = FEATURE_NAMES.index("adj_upper_exp_norm1")
    assert np.all(res.features[clique, col] > 0)
    assert res.features[clique].sum(1).mean() > res.features[8:].sum(1).mean()
    top = FEATURE_NAMES.index("adj_upper_exp_norm3")
    assert res.features[clique, top].min() > res.features[8:, top].max()


def test_insignificant_vectors_contribute_nothing():
    g = generate_weighted_er(40, 0.2, seed=2)
    res = localisation_features(g, seed=1, n_replicas=50)
    # p-values >= alpha must not produce scores in the matching column
    for kind in ("adj_upper", "adj_lower", "comb_laplacian", "rw_laplacian"):
        ps = [v["ipr"] for (k, _), v in res.pvalues.items() if k == kind]
        if ps and min(ps) >= 0.05:
            assert not res.features[:, FEATURE_NAMES.index(f"{kind}_ipr_norm1")].any()


def test_sign_equal_only_when_counts_equal():
    g, _ = planted_clique(3)
    res = localisation_features(g, seed=0, n_replicas=60)
    names = [c for c in FEATURE_NAMES if "sign_equal" in c]
    assert res.features.shape == (60, 60)
    assert np.all(res.features[:, [FEATURE_NAMES.index(c) for c in names]] >= 0)


def test_deterministic():
    g, _ = planted_clique(4)
    a = localisation_features(g, seed=7, n_replicas=20).features
    b = localisation_features(g, seed=7, n_replicas=20).features
    np.testing.assert_array_equal(a, b)
