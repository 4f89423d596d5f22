"""Tie-aware precision@k, recall@k and average precision."""
from __future__ import annotations

import numpy as np

K_GRID = tuple(2 ** i for i in range(11))


def _groups(scores, truth):
    """Tie groups in descending score order: (size, anomalies) arrays."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    if scores.shape != truth.shape:
        raise ValueError("scores and truth must have the same length")
    uniq, inv = np.unique(-scores, return_inverse=True)
    size = np.bincount(inv, minlength=len(uniq))
    hits = np.bincount(inv, weights=truth, minlength=len(uniq))
    return size, hits


def expected_hits_at(scores, truth, k: int) -> float:
    """Expected anomalies in the top ``k`` when ties are ordered uniformly at random."""
    size, hits = _groups(scores, truth)
    if not 1 <= k <= size.sum():
        raise ValueError(f"k must lie in [1, {size.sum()}]")
    before = np.concatenate([[0], np.cumsum(size)[:-1]])
    full = before + size <= k
    total = hits[full].sum()
    part = np.flatnonzero(~full & (before < k))
    if len(part):
        g = part[0]
        total += (k - before[g]) * hits[g] / size[g]
    return float(total)


def precision_recall_at(scores, truth, k: int) -> tuple[float, float]:
    hits = expected_hits_at(scores, truth, k)
    a = int(np.sum(np.asarray(truth).astype(bool)))
    return hits / k, (hits / a if a else float("nan"))


def average_precision(scores, truth) -> float:
    """Expected AP over uniformly random orderings within tie groups.

    AP is the sum over ranks ``i`` of (recall(i) - recall(i-1)) * precision(i),
    with recall(0) = 0.
    """
    size, hits = _groups(scores, truth)
    a = hits.sum()
    if a == 0:
        raise ValueError("average precision is undefined without anomalies")
    total = 0.0
    c0 = 0.0
    s0 = 0
    for g, r in zip(size, hits):
        if r > 0:
            j = np.arange(1, g + 1)
            inner = (j - 1) * (r - 1) / (g - 1) if g > 1 else np.zeros(1)
            total += np.sum((r / g) * (c0 + 1 + inner) / (s0 + j))
        c0 += r
        s0 += g
    return float(total / a)


def rank_table(scores, truth, ks=K_GRID) -> list[tuple[int, float, float]]:
    n = len(scores)
    return [(k, *precision_recall_at(scores, truth, k)) for k in ks if k <= n]
