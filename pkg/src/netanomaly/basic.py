"""Node-level weight tests (GAW, GAW top 10%/20%) and standardised degree."""
from __future__ import annotations

import math

import numpy as np

from .graph import WeightedDigraph
from .nulls import monte_carlo_p, p_to_score

GAW_FRACTIONS = (1.0, 0.1, 0.2)


def _top_count(d: int, f: float) -> int:
    # guard against 0.1 * 30 = 3.0000000000000004
    return d if f >= 1.0 else max(1, math.ceil(round(f * d, 9)))


def gaw(weights, f: float = 1.0) -> float:
    """Geometric mean of the ``ceil(f * d)`` largest of ``d`` weights."""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return 0.0
    top = np.sort(w)[::-1][: _top_count(w.size, f)]
    return float(np.exp(np.mean(np.log(top))))


def _gaw_rows(log_w_desc: np.ndarray) -> np.ndarray:
    """GAW, GAW10, GAW20 for each row of descending-sorted log weights."""
    d = log_w_desc.shape[1]
    csum = np.cumsum(log_w_desc, axis=1)
    out = np.empty((log_w_desc.shape[0], 3))
    for c, f in enumerate(GAW_FRACTIONS):
        t = _top_count(d, f)
        out[:, c] = np.exp(csum[:, t - 1] / t)
    return out


def incident_weights(g: WeightedDigraph):
    """CSR-style (indptr, weights) of in- and out-edge weights per node."""
    nodes = np.concatenate([g.src, g.dst])
    w = np.concatenate([g.weight, g.weight])
    order = np.argsort(nodes, kind="stable")
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(nodes, minlength=g.n), out=indptr[1:])
    return indptr, w[order]


def gaw_features(g: WeightedDigraph, rng, n_samples: int = 10_000, alpha: float = 0.05):
    """Scores for GAW, GAW10 and GAW20 against a weight-resampling null.

    Nodes with the same number of incident edges share one null of
    ``n_samples`` with-replacement draws from the observed weights.
    Returns an ``(n, 3)`` array.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    scores = np.zeros((g.n, 3))
    if g.m == 0:
        return scores
    indptr, inc = incident_weights(g)
    deg = np.diff(indptr)
    log_pool = np.log(g.weight)
    for d in np.unique(deg[deg > 0]):
        members = np.flatnonzero(deg == d)
        obs = np.stack([inc[indptr[v]:indptr[v + 1]] for v in members])
        obs = _gaw_rows(-np.sort(-np.log(obs), axis=1))
        draws = log_pool[rng.integers(len(log_pool), size=(n_samples, int(d)))]
        null = _gaw_rows(-np.sort(-draws, axis=1))
        for c in range(3):
            p = monte_carlo_p(obs[:, c], null[:, c], "upper")
            scores[members, c] = p_to_score(p, alpha)
    return scores


def standardized_degree(g: WeightedDigraph) -> np.ndarray:
    """Signed z-score of total degree (in + out edge count)."""
    d_in, d_out = g.degrees()
    total = (d_in + d_out).astype(float)
    sd = total.std()
    if g.n < 2 or sd == 0:
        return np.zeros(g.n)
    return (total - total.mean()) / sd
