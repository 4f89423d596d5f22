"""Configuration-model replicas, Monte Carlo p-values and the p -> score map."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .graph import WeightedDigraph

ALPHA = 0.05
RESAMPLE_CAP = 10_000


class ResamplingError(RuntimeError):
    pass


def rng_for(seed, *keys) -> np.random.Generator:
    """Generator derived from a master seed and a stable unit id."""
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])


@dataclass(frozen=True)
class ScoreConvention:
    alpha: float = ALPHA
    tail: str = "upper"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.tail not in ("upper", "lower"):
            raise ValueError("tail must be 'upper' or 'lower'")


def stub_matching(g: WeightedDigraph, rng: np.random.Generator):
    """Raw stub matching: returns (src, dst, weight) before any cleanup.

    Out-stubs stay in edge order; in-stubs and the weight list are shuffled.
    Nodes without edges contribute no stubs.
    """
    return g.src.copy(), rng.permutation(g.dst), rng.permutation(g.weight)


def cleanup_matching(src, dst, w, rng: np.random.Generator):
    """Drop self-loops, keep one random copy of each multi-edge and drop
    nodes left without edges.  Returns (src, dst, weight, kept_node_ids)."""
    loop = src == dst
    src, dst, w = src[~loop], dst[~loop], w[~loop]
    if len(src):
        perm = rng.permutation(len(src))
        src, dst, w = src[perm], dst[perm], w[perm]
        key = src * (max(src.max(), dst.max()) + 1) + dst
        _, first = np.unique(key, return_index=True)
        first.sort()
        src, dst, w = src[first], dst[first], w[first]
    nodes = np.unique(np.concatenate([src, dst]))
    pos = np.searchsorted(nodes, src), np.searchsorted(nodes, dst)
    return pos[0], pos[1], w, nodes


def configuration_replica(g: WeightedDigraph, rng) -> WeightedDigraph:
    """One configuration-model replica with shuffled weights.

    The result may have fewer nodes than ``g``; surviving nodes are
    relabelled densely.  An empty cleanup yields a single isolated node.
    """
    if g.m == 0:
        raise ValueError("configuration model needs at least one edge")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    s, d, w, nodes = cleanup_matching(*stub_matching(g, rng), rng)
    return WeightedDigraph(max(len(nodes), 1), s, d, w)


def eigvec_capacity(graph: WeightedDigraph, trivial: int = 0) -> int:
    """Usable eigenvectors: node count minus trivial eigenvectors."""
    return graph.n - trivial


def resample_replica_with_min_size(
    g: WeightedDigraph,
    min_eigvecs: int,
    rng: np.random.Generator,
    trivial: int = 0,
    max_attempts: int = RESAMPLE_CAP,
    late_min_nodes: int | None = None,
) -> WeightedDigraph:
    """Replica with at least ``min_eigvecs`` usable eigenvectors.

    Up to ten draws look for a large-enough replica; the tenth is accepted
    anyway if it has more than two nodes.  Beyond that, draws continue
    until one is large enough or ``max_attempts`` is hit.  With
    ``late_min_nodes``, any draw after the tenth with at least that many
    nodes is also accepted.
    """
    if min_eigvecs < 1:
        raise ValueError("min_eigvecs must be >= 1")
    for attempt in range(1, max_attempts + 1):
        rep = configuration_replica(g, rng)
        if eigvec_capacity(rep, trivial) >= min_eigvecs:
            return rep
        if attempt == 10 and rep.n > 2:
            return rep
        if late_min_nodes is not None and attempt > 10 and rep.n >= late_min_nodes:
            return rep
    raise ResamplingError(
        f"no replica with {min_eigvecs} usable eigenvectors after {max_attempts} draws "
        f"(source has {g.n} nodes, {g.m} edges)"
    )


@dataclass
class NullEnsemble:
    """Seeded replicas of one source graph; replica ``i`` depends only on (seed, i)."""

    replicas: list
    seeds: list

    @property
    def size(self) -> int:
        return len(self.replicas)

    @classmethod
    def build(cls, g: WeightedDigraph, size: int, seed, stream: int = 0,
              min_eigvecs: int | None = None, trivial: int = 0,
              late_min_nodes: int | None = None) -> "NullEnsemble":
        reps, seeds = [], []
        for i in range(size):
            rng = rng_for(seed, stream, i)
            if min_eigvecs:
                rep = resample_replica_with_min_size(g, min_eigvecs, rng, trivial,
                                                        late_min_nodes=late_min_nodes)
            else:
                rep = configuration_replica(g, rng)
            reps.append(rep)
            seeds.append((int(seed), stream, i))
        return cls(reps, seeds)

    def map(self, fn: Callable[[WeightedDigraph], object]) -> list:
        return [fn(r) for r in self.replicas]


def monte_carlo_p(observed, null_samples, tail: str = "upper"):
    """``(1 + #{null at least as extreme}) / (N + 1)``; ties count as extreme.

    Accepts a scalar or an array of observations against one null sample.
    """
    null = np.sort(np.asarray(null_samples, dtype=float).ravel())
    if null.size == 0:
        raise ValueError("null sample is empty")
    obs = np.asarray(observed, dtype=float)
    if tail == "upper":
        count = null.size - np.searchsorted(null, obs, side="left")
    elif tail == "lower":
        count = np.searchsorted(null, obs, side="right")
    else:
        raise ValueError("tail must be 'upper' or 'lower'")
    p = (1.0 + count) / (null.size + 1.0)
    return float(p) if p.ndim == 0 else p


def p_to_score(p, alpha: float = ALPHA):
    """``Phi^-1(1 - p)`` when ``p < alpha``, else 0."""
    p = np.asarray(p, dtype=float)
    out = np.where(p < alpha, -special.ndtri(np.clip(p, 1e-300, 1.0)), 0.0)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out
