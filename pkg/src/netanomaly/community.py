"""Heavy-path augmentation, Louvain partition and community-level features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedDigraph, symmetrise, weight_percentile
from .louvain import louvain
from .nulls import configuration_replica, monte_carlo_p, p_to_score, rng_for

SMALL_COMMUNITY = 4
CONFIG_ALPHA = 0.5


@dataclass
class AugmentedGraph:
    base: WeightedDigraph
    graph: WeightedDigraph
    threshold: float
    added: int
    raised: int


@dataclass
class Partition:
    labels: np.ndarray

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        splits = np.cumsum(np.bincount(self.labels, minlength=self.count))[:-1]
        return np.split(order, splits)


def augment(g: WeightedDigraph, q: float = 0.99) -> AugmentedGraph:
    """Close heavy 2-paths u -> v -> x into shortcut edges u -> x.

    An edge is heavy if its weight exceeds the ``q`` quantile of the
    original weights (fixed for the whole run).  The shortcut gets
    ``min(w1, w2)``, or raises an existing u -> x to that value.  Repeats
    until nothing changes.  Parallel edges are summed first.
    """
    simple = g.simple()
    thr = weight_percentile(g, q)
    w = {(int(s), int(d)): float(x) for s, d, x in zip(simple.src, simple.dst, simple.weight)}
    heavy_out: dict[int, dict[int, float]] = {}
    for (s, d), x in w.items():
        if x > thr:
            heavy_out.setdefault(s, {})[d] = x
    added = raised = 0
    changed = True
    while changed:
        changed = False
        for u in list(heavy_out):
            for v, w1 in list(heavy_out[u].items()):
                for x, w2 in list(heavy_out.get(v, {}).items()):
                    if x == u:
                        continue
                    m = min(w1, w2)
                    cur = w.get((u, x))
                    if cur is None:
                        w[(u, x)] = m
                        added += 1
                    elif cur < m:
                        w[(u, x)] = m
                        raised += 1
                    else:
                        continue
                    heavy_out.setdefault(u, {})[x] = m
                    changed = True
    if added or raised:
        keys = np.array(list(w.keys()), dtype=np.int64).reshape(-1, 2)
        graph = WeightedDigraph(g.n, keys[:, 0], keys[:, 1], np.array(list(w.values())), g.labels)
    else:
        graph = simple
    return AugmentedGraph(g, graph, thr, added, raised)


def detect_communities(aug, seed=0, resolution: float = 1.0) -> Partition:
    """Louvain on ``A + A^T`` of the (augmented) graph."""
    graph = aug.graph if isinstance(aug, AugmentedGraph) else aug
    return Partition(louvain(symmetrise(graph, dense=False), seed=seed, resolution=resolution))


def directed_density(m: int, s: int) -> float:
    return m / (s * (s - 1)) if s > 1 else 0.0


def _log_gaw(w: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(w)))) if len(w) else 0.0


def community_edge_stats(g: WeightedDigraph, labels: np.ndarray):
    """Per community: size, internal edge count, internal GAW."""
    k = int(labels.max()) + 1
    size = np.bincount(labels, minlength=k)
    inside = labels[g.src] == labels[g.dst]
    c = labels[g.src[inside]]
    m_in = np.bincount(c, minlength=k)
    logsum = np.bincount(c, weights=np.log(g.weight[inside]), minlength=k)
    with np.errstate(invalid="ignore", divide="ignore"):
        gaw = np.where(m_in > 0, np.exp(logsum / np.maximum(m_in, 1)), 0.0)
    return size, m_in, gaw


def random_community_density(g: WeightedDigraph, seed, q: float = 0.99) -> float:
    """Density (in ``g``) of one uniformly chosen community of ``g``."""
    rng = np.random.default_rng(seed)
    part = detect_communities(augment(g, q), seed=rng)
    size, m_in, _ = community_edge_stats(g, part.labels)
    c = int(rng.integers(len(size)))
    return directed_density(int(m_in[c]), int(size[c]))


def community_features(g: WeightedDigraph, partition: Partition, seed=0, n_replicas: int = 20,
                       q: float = 0.99) -> np.ndarray:
    """Six community features broadcast to members, shape ``(n, 6)``.

    Columns: density ratio, density ratio / size, GAW ratio, GAW ratio / size,
    configuration-model density score, small-community flag.  All densities
    are measured on the non-augmented graph.
    """
    labels = partition.labels
    size, m_in, gaw_c = community_edge_stats(g, labels)
    whole_density = directed_density(g.m, g.n)
    whole_gaw = _log_gaw(g.weight)
    dens = np.array([directed_density(int(m), int(s)) for m, s in zip(m_in, size)])
    dens_ratio = dens / whole_density if whole_density > 0 else np.zeros_like(dens)
    gaw_ratio = gaw_c / whole_gaw if whole_gaw > 0 else np.zeros_like(gaw_c)
    config = np.zeros(len(size))
    if g.m > 0 and n_replicas > 0:
        null = [random_community_density(configuration_replica(g, rng_for(seed, 1, r)),
                                          rng_for(seed, 2, r), q) for r in range(n_replicas)]
        p = monte_carlo_p(dens, null, "upper")
        config = np.where(np.asarray(p) > CONFIG_ALPHA, 0.0, p_to_score(p, alpha=CONFIG_ALPHA + 1e-12))
    out = np.column_stack([
        dens_ratio,
        dens_ratio / size,
        gaw_ratio,
        gaw_ratio / size,
        config,
        (size < SMALL_COMMUNITY).astype(float),
    ])
    return out[labels]
