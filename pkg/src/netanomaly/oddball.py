"""Directed Oddball-lite baseline: egonet power laws and outlier scores."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .graph import WeightedDigraph

RELATIONSHIPS = (
    ("nodes_vs_edges", "nodes", "edges"),
    ("edges_vs_weight", "edges", "weight"),
    ("egonet_out_degree_vs_out_weight", "boundary_out_count", "boundary_out_weight"),
    ("egonet_in_degree_vs_in_weight", "boundary_in_count", "boundary_in_weight"),
    ("ego_out_degree_vs_out_weight", "ego_out_degree", "ego_out_weight"),
    ("ego_in_degree_vs_in_weight", "ego_in_degree", "ego_in_weight"),
    ("weight_vs_max_weight", "weight", "max_weight"),
    ("in_weight_vs_max_in_weight", "boundary_in_weight", "boundary_in_max"),
    ("out_weight_vs_max_out_weight", "boundary_out_weight", "boundary_out_max"),
)
RELATIONSHIP_NAMES = tuple(r[0] for r in RELATIONSHIPS)
SUMMARY_FIELDS = (
    "nodes", "edges", "weight", "max_weight",
    "boundary_out_count", "boundary_out_weight", "boundary_out_max",
    "boundary_in_count", "boundary_in_weight", "boundary_in_max",
    "ego_out_degree", "ego_out_weight", "ego_in_degree", "ego_in_weight",
)


@njit
def egonet_kernel(n, und_ptr, und_idx, out_ptr, out_dst, out_w):
    """Per node: the first ten ``SUMMARY_FIELDS`` of its 1-hop egonet."""
    res = np.zeros((n, 10))
    stamp = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        # undirected CSR rows are duplicate-free
        k = 1 + und_ptr[u + 1] - und_ptr[u]
        members = np.empty(k, dtype=np.int64)
        members[0] = u
        members[1:] = und_idx[und_ptr[u]:und_ptr[u + 1]]
        for t in range(k):
            stamp[members[t]] = u
        res[u, 0] = k
        for t in range(k):
            a = members[t]
            for p in range(out_ptr[a], out_ptr[a + 1]):
                b = out_dst[p]
                w = out_w[p]
                if stamp[b] == u:
                    res[u, 1] += 1
                    res[u, 2] += w
                    res[u, 3] = max(res[u, 3], w)
                else:
                    res[u, 4] += 1
                    res[u, 5] += w
                    res[u, 6] = max(res[u, 6], w)
        # edges entering the egonet: in-edges of members from outside
        for t in range(k):
            b = members[t]
            for p in range(out_ptr[n + b], out_ptr[n + b + 1]):
                a = out_dst[p]
                if stamp[a] != u:
                    w = out_w[p]
                    res[u, 7] += 1
                    res[u, 8] += w
                    res[u, 9] = max(res[u, 9], w)
    return res


def egonet_summaries(g: WeightedDigraph) -> dict[str, np.ndarray]:
    """Egonet counts and weights on the simple graph (parallel edges summed).

    The egonet of ``u`` is ``u`` plus its neighbours in either direction;
    "boundary" edges have exactly one end inside it.
    """
    s = g.simple()
    n = g.n
    a = s.adjacency().tocsr()
    a.sort_indices()
    at = a.T.tocsr()
    at.sort_indices()
    und = (a + at).tocsr()
    und.sort_indices()
    # out-lists followed by in-lists in one CSR (in-list of b at row n + b)
    ptr = np.concatenate([a.indptr, a.indptr[-1] + at.indptr[1:]]).astype(np.int64)
    idx = np.concatenate([a.indices, at.indices]).astype(np.int64)
    w = np.concatenate([a.data, at.data]).astype(np.float64)
    res = egonet_kernel(n, und.indptr.astype(np.int64), und.indices.astype(np.int64), ptr, idx, w)
    out = {f: res[:, i] for i, f in enumerate(SUMMARY_FIELDS[:10])}
    out["ego_out_degree"] = np.diff(a.indptr).astype(float)
    out["ego_out_weight"] = np.asarray(a.sum(axis=1)).ravel()
    out["ego_in_degree"] = np.diff(at.indptr).astype(float)
    out["ego_in_weight"] = np.asarray(at.sum(axis=1)).ravel()
    return out


def powerlaw_fit(x, y) -> tuple[float, float]:
    """Least squares of log y on log x over positive pairs; returns (log intercept, exponent)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        raise ValueError("power-law fit needs at least 2 positive pairs")
    lx, ly = np.log(x[ok]), np.log(y[ok])
    if np.ptp(lx) == 0:
        return float(ly.mean()), 0.0
    b, a = np.polyfit(lx, ly, 1)
    return float(a), float(b)


def outlier_score(observed, predicted) -> np.ndarray:
    """``max/min * ln(|obs - pred| + 1)``; zero where either side is not positive."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    ok = (obs > 0) & (pred > 0)
    out = np.zeros(np.broadcast(obs, pred).shape)
    o, p = np.broadcast_to(obs, out.shape)[ok], np.broadcast_to(pred, out.shape)[ok]
    out[ok] = np.maximum(o, p) / np.minimum(o, p) * np.log1p(np.abs(o - p))
    return out


@dataclass
class OddballResult:
    scores: np.ndarray  # (n, 9)
    fits: dict
    skipped: dict = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return self.scores.sum(axis=1)


def oddball_scores(g: WeightedDigraph) -> OddballResult:
    summ = egonet_summaries(g)
    scores = np.zeros((g.n, len(RELATIONSHIPS)))
    fits, skipped = {}, {}
    for r, (name, xf, yf) in enumerate(RELATIONSHIPS):
        x, y = summ[xf], summ[yf]
        try:
            a, b = powerlaw_fit(x, y)
        except ValueError:
            skipped[name] = g.n
            continue
        fits[name] = (a, b)
        with np.errstate(divide="ignore", over="ignore"):
            pred = np.where(x > 0, math.exp(a) * np.power(np.where(x > 0, x, 1.0), b), 0.0)
        scores[:, r] = outlier_score(y, pred)
        skipped[name] = int(np.sum((y <= 0) | (pred <= 0)))
    return OddballResult(scores, fits, skipped)
