import math

import numpy as np
import pytest

from netanomaly.basic import gaw, gaw_features, standardized_degree
from netanomaly.graph import from_edges


def test_gaw_values():
    assert gaw([0.5, 0.5]) == pytest.approx(0.5)
    assert gaw([0.1, 0.9], 0.1) == pytest.approx(0.9)
    assert gaw([0.2, 0.4, 0.8]) == pytest.approx(0.064 ** (1 / 3))
    assert gaw([]) == 0.0


def test_top_fraction_uses_ceiling():
    w = np.linspace(0.01, 1, 30)
    assert gaw(w, 0.1) == pytest.approx(math.exp(np.log(np.sort(w)[-3:]).mean()))


def test_unbeatable_gaw_scores_3_72():
    from scipy import special
    # node 0 carries the only three heavy edges among 300; a null draw of three
    # heavy weights has probability (3/300)^3, so p = 1/10001 in practice
    rng = np.random.default_rng(0)
    edges = [(0, 1, 1.0), (0, 2, 0.999), (3, 0, 0.998)]
    while len(edges) < 300:
        a, b = rng.integers(4, 200, size=2)
        if a != b:
            edges.append((int(a), int(b), float(rng.uniform(0.01, 0.5))))
    g = from_edges(200, edges)
    s = gaw_features(g, 1, n_samples=10_000)
    assert s[0, 0] == pytest.approx(-special.ndtri(1 / 10_001))
    assert s[0, 0] == pytest.approx(3.72, abs=5e-3)


def test_median_node_scores_zero_and_shared_null():
    g = from_edges(4, [(0, 1, 0.5), (2, 3, 0.5)])
    s = gaw_features(g, 3, n_samples=1000)
    assert not s.any()
    np.testing.assert_array_equal(s[0], s[2])


def test_standardized_degree():
    hub = from_edges(3, [(0, 0, 1.0), (0, 1, 1.0), (2, 0, 1.0)], allow_self_loops=True)  # degrees 4, 1, 1
    assert standardized_degree(hub)[0] == pytest.approx(2 / math.sqrt(2))
    ring = from_edges(4, [(i, (i + 1) % 4, 1.0) for i in range(4)])
    assert not standardized_degree(ring).any()
    star = from_edges(5, [(0, i, 1.0) for i in range(1, 5)])  # degrees 4,1,1,1,1
    d = np.array([4, 1, 1, 1, 1.0])
    np.testing.assert_allclose(standardized_degree(star), (d - d.mean()) / d.std())
    pair = from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])
    assert not standardized_degree(pair).any()
