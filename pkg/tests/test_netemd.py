import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netanomaly.community import augment, detect_communities
from netanomaly.generators import _replace_edges, generate_weighted_er, structure_edges
from netanomaly.graph import from_edges
from netanomaly.netemd import (
    FEATURE_NAMES,
    TRIAD_NAMES,
    _emd_sorted,
    choose_sign,
    eigen_statistics,
    motif_statistics,
    netemd_distance,
    netemd_features,
    netemd_ternary,
    node_scores,
    shifted_l1,
    standardise,
    trimmed_mean,
)
from netanomaly.spectral import all_spectra, operator_matrix


def grid_l1(x, y, step=1e-4):
    """Dense shift-grid minimiser of the EDF L1 distance (standardised inputs)."""
    xs, ys = standardise(x), standardise(y)
    shifts = np.arange(xs.min() - ys.max() - 0.01, xs.max() - ys.min() + 0.01, step)
    pts = np.sort(np.concatenate([np.broadcast_to(xs, (len(shifts), len(xs))), ys[None, :] + shifts[:, None]], axis=1))
    mids, widths = pts[:, :-1], np.diff(pts, axis=1)
    fx = np.searchsorted(xs, mids.ravel(), side="right").reshape(mids.shape) / len(xs)
    fy = (ys[None, None, :] + shifts[:, None, None] <= mids[:, :, None]).mean(axis=2)
    return float((np.abs(fx - fy) * widths).sum(axis=1).min())


def brute_motifs(n, edges):
    """Exact triad-weighted counts via networkx triad types and Fraction weights."""
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    G.add_edges_from((a, b) for a, b, _ in edges)
    W = {(a, b): Fraction(w) for a, b, w in edges}
    ref = [[Fraction(0)] * len(TRIAD_NAMES) for _ in range(n)]
    for tri in itertools.combinations(range(n), 3):
        t = nx.triad_type(G.subgraph(tri))
        if t not in TRIAD_NAMES:
            continue
        prod = Fraction(1)
        for a, b in itertools.permutations(tri, 2):
            prod *= W.get((a, b), Fraction(1))
        for a in tri:
            ref[a][TRIAD_NAMES.index(t)] += prod
    return ref


def test_empty_graph_statistics_zero():
    assert not motif_statistics(from_edges(4, [])).any()


def test_triangle_cycle():
    m = motif_statistics(from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]))
    col = 3 + TRIAD_NAMES.index("030C")
    np.testing.assert_array_equal(m[:, col], 1.0)
    w = motif_statistics(from_edges(3, [(0, 1, 2.0), (1, 2, 3.0), (2, 0, 5.0)]))
    np.testing.assert_array_equal(w[:, col], 30.0)
    np.testing.assert_array_equal(w[:, :3], [[2, 5, 7], [3, 2, 5], [5, 3, 8]])


@pytest.mark.parametrize("trial", range(10))
def test_motifs_match_brute_force(trial):
    rng = np.random.default_rng(trial)
    n = int(rng.integers(3, 13))
    edges = [(a, b, int(rng.integers(1, 9)) / 4) for a in range(n) for b in range(n)
             if a != b and rng.random() < 0.3]
    got = motif_statistics(from_edges(n, edges))[:, 3:]
    ref = brute_motifs(n, edges)
    assert all(Fraction(got[i, j]) == ref[i][j] for i in range(n) for j in range(len(TRIAD_NAMES)))


def test_choose_sign_rules():
    np.testing.assert_array_equal(choose_sign([1, 1, -1]), [1, 1, -1])
    np.testing.assert_array_equal(choose_sign([2, -1, -1]), [-2, 1, 1])
    np.testing.assert_array_equal(choose_sign([3, -2, -1]), [-3, 2, 1])
    np.testing.assert_array_equal(choose_sign([1, -1]), [1, -1])
    # equal counts, odd moments decide
    np.testing.assert_array_equal(choose_sign([3, -1, 1, -2]), [3, -1, 1, -2])


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12))
@settings(max_examples=200, deadline=None)
def test_choose_sign_idempotent(v):
    once = choose_sign(v)
    np.testing.assert_array_equal(choose_sign(once), once)


def test_distance_examples():
    assert netemd_distance([1, 2, 3], [1, 2, 3]) == 0
    d = netemd_distance([0, 0, 1], [0, 1, 1])
    assert d > 0 and d == pytest.approx(grid_l1([0, 0, 1], [0, 1, 1]), abs=1e-3)
    x = np.random.default_rng(0).normal(size=200)
    assert netemd_distance(x, 3.5 * x - 2) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_distance_matches_grid_and_ternary(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        x = rng.integers(0, 5, rng.integers(1, 13)).astype(float)
        y = rng.normal(size=rng.integers(1, 13))
        d = netemd_distance(x, y)
        assert d == pytest.approx(grid_l1(x, y), abs=1e-3)
        assert d == pytest.approx(netemd_ternary(x, y), abs=1e-6)


def test_shift_objective_minimum_not_below_exact():
    rng = np.random.default_rng(3)
    x, y = standardise(rng.normal(size=9)), standardise(rng.exponential(size=7))
    d = netemd_distance(x, y)
    assert all(shifted_l1(x, y, s) >= d - 1e-12 for s in np.linspace(-4, 4, 801))


def test_emd_kernel_matches_python():
    rng = np.random.default_rng(1)
    x, y = np.sort(rng.normal(size=11)), np.sort(rng.normal(size=6))
    assert _emd_sorted(x, y) == pytest.approx(_emd_sorted.py_func(x, y), abs=1e-12)


def test_eigen_statistics_are_unit_eigenvectors():
    g = generate_weighted_er(3, 1.0, seed=1)
    ev = eigen_statistics(g, np.random.default_rng(0))
    assert ev["comb_laplacian"].shape[1] <= 2
    h = generate_weighted_er(50, 0.1, seed=2)
    ev = eigen_statistics(h, np.random.default_rng(0))
    for kind, vecs in ev.items():
        m = operator_matrix(h, kind)
        for i in range(vecs.shape[1]):
            v = vecs[:, i]
            lam = v @ m @ v if kind != "rw_laplacian" else (m @ v)[np.argmax(np.abs(v))] / v[np.argmax(np.abs(v))]
            assert np.abs(m @ v - lam * v).max() < 1e-6
            assert np.linalg.norm(v) == pytest.approx(1.0)
            np.testing.assert_array_equal(choose_sign(v), v)


def test_node_scores():
    t = np.r_[np.zeros(99), 1.0]
    s1, s2 = node_scores(t, 0.01)
    assert s1[-1] == pytest.approx(np.sqrt(99)) and not s1[:-1].any()
    assert s2[-1] > 0
    # +-1 background keeps mean 0 and sd 1 to within 1e-3, so z is the raw value
    t = np.r_[np.full(5000, -1.0), np.full(5000, 1.0), 1.9, 2.5]
    s1, _ = node_scores(t, 0.01)
    assert s1[-2] == 0
    assert s1[-1] == pytest.approx(2.5, abs=2e-3)


def test_trimmed_mean():
    assert trimmed_mean([1, 2, 3, 100]) == 2.5
    assert trimmed_mean([4.0]) == 4.0


def test_null_like_statistics_give_zero_scores():
    g = generate_weighted_er(30, 0.15, seed=9)
    res = netemd_features(g, g, seed=1, n_reference=15, n_null=40)
    assert res.features.shape == (30, len(FEATURE_NAMES))
    # an ER community is itself a configuration-like draw: very few tests fire
    fired = sum(1 for _, _, r in res.tests if r is not None and r[1] < 0.05)
    assert fired <= 4


def _ring_trial(seed):
    rng = np.random.default_rng(seed)
    g = generate_weighted_er(2000, 0.005, seed=seed)
    ring = rng.choice(2000, 10, replace=False)
    e = structure_edges("ring", ring, rng)
    g = _replace_edges(g, [a for a, _ in e], [b for _, b in e], rng.uniform(0.99, 1.0, len(e)))
    aug = augment(g)
    part = detect_communities(aug, seed=seed)
    members = np.flatnonzero(part.labels == np.bincount(part.labels[ring]).argmax())
    res = netemd_features(g.subgraph(members), aug.graph.subgraph(members), seed=seed)
    col = FEATURE_NAMES.index("motif_2_score1")
    f = res.features[:, col] + res.features[:, col + 1]
    on_ring = np.isin(members, ring)
    return f[on_ring].mean() > f[~on_ring].mean()


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="weight-shuffling null keeps the in-strength distribution; "
                                       "ring members win in about 1 of 30 trials")
def test_ring_members_flagged_by_in_strength():
    assert sum(_ring_trial(s) for s in range(30)) >= 24
