import math

import numpy as np
import pytest

from netanomaly.graph import from_edges
from netanomaly.oddball import (
    RELATIONSHIPS,
    egonet_kernel,
    egonet_summaries,
    oddball_scores,
    outlier_score,
    powerlaw_fit,
)

from conftest import random_graph


def snowball(g, u):
    """Brute-force egonet summary from the raw edge list (simple graph)."""
    s = g.simple()
    e = list(zip(s.src.tolist(), s.dst.tolist(), s.weight.tolist()))
    ego = {u} | {b for a, b, _ in e if a == u} | {a for a, b, _ in e if b == u}
    inside = [w for a, b, w in e if a in ego and b in ego]
    out_b = [w for a, b, w in e if a in ego and b not in ego]
    in_b = [w for a, b, w in e if b in ego and a not in ego]
    return {
        "nodes": len(ego), "edges": len(inside), "weight": sum(inside), "max_weight": max(inside, default=0),
        "boundary_out_count": len(out_b), "boundary_out_weight": sum(out_b), "boundary_out_max": max(out_b, default=0),
        "boundary_in_count": len(in_b), "boundary_in_weight": sum(in_b), "boundary_in_max": max(in_b, default=0),
    }


def test_isolated_and_star():
    g = from_edges(6, [(0, i, 1.0) for i in range(1, 5)])
    s = egonet_summaries(g)
    assert (s["nodes"][5], s["edges"][5]) == (1, 0)
    assert (s["nodes"][0], s["edges"][0], s["weight"][0]) == (5, 4, 4)


def test_clique_egonets():
    g = from_edges(5, [(a, b, 1.0) for a in range(5) for b in range(5) if a < b])
    s = egonet_summaries(g)
    for u in range(5):
        ref = snowball(g, u)
        assert s["nodes"][u] == ref["nodes"] == 5
        assert s["edges"][u] == ref["edges"] == 10


@pytest.mark.parametrize("seed", range(6))
def test_egonets_match_snowball(seed):
    g = random_graph(15, 0.15, seed)
    if g.m == 0:
        return
    s = egonet_summaries(g)
    for u in range(g.n):
        for k, v in snowball(g, u).items():
            assert s[k][u] == pytest.approx(v), (u, k)


def test_kernel_python_equivalence():
    g = random_graph(30, 0.1, 3)
    a = egonet_summaries(g)
    from netanomaly import oddball
    orig = oddball.egonet_kernel
    try:
        oddball.egonet_kernel = egonet_kernel.py_func
        b = egonet_summaries(g)
    finally:
        oddball.egonet_kernel = orig
    for k in a:
        np.testing.assert_allclose(a[k], b[k])


def test_powerlaw_fit():
    x = np.linspace(1, 50, 40)
    a, b = powerlaw_fit(x, 2 * x ** 1.5)
    assert a == pytest.approx(math.log(2), abs=1e-9) and b == pytest.approx(1.5, abs=1e-9)
    a, b = powerlaw_fit([1, 4], [3, 12])
    assert math.exp(a) * 4 ** b == pytest.approx(12)
    rng = np.random.default_rng(0)
    x = rng.uniform(1, 100, 1000)
    y = 3 * x ** 0.8 * np.exp(rng.normal(0, 0.2, 1000))
    assert powerlaw_fit(x, y)[1] == pytest.approx(0.8, abs=0.05)


def test_outlier_score():
    assert outlier_score(3.0, 3.0) == 0
    assert outlier_score(2.0, 1.0) == pytest.approx(2 * math.log(2))
    assert outlier_score(0.0, 1.0) == 0


def test_total_is_sum_of_relationships():
    g = random_graph(40, 0.1, 5)
    res = oddball_scores(g)
    assert res.scores.shape == (40, len(RELATIONSHIPS))
    np.testing.assert_array_equal(res.total, res.scores.sum(axis=1))
