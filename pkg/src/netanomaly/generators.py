"""Benchmark networks with planted heavy structures, and detectability bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .graph import GroundTruth, WeightedDigraph

KINDS = ("path", "ring", "star", "clique", "tree")
TREE_SHELLS = (5, 3, 1)


@dataclass
class AnomalySpec:
    kind: str
    nodes: tuple
    edges: tuple = ()
    floor: float = 0.0

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class BoundQuery:
    kind: str
    n: int
    k: int = 5
    k1: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown structure {self.kind!r}")
        k = 9 if self.kind == "tree" else self.k
        if k > self.n:
            raise ValueError("structure larger than the network")
        if self.kind == "star" and not 0 <= self.k1 < self.k:
            raise ValueError("star needs 0 <= k1 < k")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_weighted_er(n: int, p: float, seed=None) -> WeightedDigraph:
    """Directed ER graph; every ordered pair i != j is an edge w.p. ``p``,
    with Uniform(0, 1) weights.

    Sampling the edge count from Binomial(n(n-1), p) and then a uniform
    subset of that size has the same law as independent Bernoulli trials.
    """
    if n < 2 or not 0 < p <= 1:
        raise ValueError("need n >= 2 and 0 < p <= 1")
    rng = _rng(seed)
    total = n * (n - 1)
    m = int(rng.binomial(total, p))
    idx = np.sort(rng.choice(total, size=m, replace=False)) if m < total else np.arange(total)
    src = idx // (n - 1)
    r = idx % (n - 1)
    dst = r + (r >= src)
    # weights strictly inside (0, 1)
    w = rng.uniform(0.0, 1.0, size=m)
    while np.any(w <= 0):
        bad = w <= 0
        w[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
    return WeightedDigraph(n, src, dst, w)


def structure_edges(kind: str, nodes, rng: np.random.Generator) -> list:
    """Directed edges of one planted structure on ``nodes`` (in draw order)."""
    nodes = [int(v) for v in nodes]
    k = len(nodes)
    if kind == "path":
        return [(nodes[i], nodes[i + 1]) for i in range(k - 1)]
    if kind == "ring":
        return [(nodes[i], nodes[i + 1]) for i in range(k - 1)] + [(nodes[-1], nodes[0])]
    if kind == "star":
        centre, leaves = nodes[0], nodes[1:]
        flip = rng.random(len(leaves)) < 0.5
        return [(leaf, centre) if f else (centre, leaf) for leaf, f in zip(leaves, flip)]
    if kind == "clique":
        pairs = [(nodes[i], nodes[j]) for i in range(k) for j in range(i + 1, k)]
        flip = rng.random(len(pairs)) < 0.5
        return [(b, a) if f else (a, b) for (a, b), f in zip(pairs, flip)]
    if kind == "tree":
        a, b, c = TREE_SHELLS
        left, mid, right = nodes[:a], nodes[a:a + b], nodes[a + b:a + b + c]
        return [(u, v) for u in left for v in mid] + [(u, v) for u in mid for v in right]
    raise ValueError(f"unknown structure {kind!r}")


def default_count_range(n: int) -> tuple[int, int]:
    """Anomaly-count range keeping the 10,000-node anomalous fraction."""
    if n >= 10_000:
        return (5, 20)
    lo = max(1, round(5 * n / 10_000))
    hi = max(lo, round(20 * n / 10_000))
    return (lo, hi)


def _replace_edges(g: WeightedDigraph, new_src, new_dst, new_w) -> WeightedDigraph:
    """Drop existing edges with the same direction, then add the new ones."""
    new_key = np.asarray(new_src, np.int64) * g.n + np.asarray(new_dst, np.int64)
    # later duplicates overwrite earlier ones
    _, last = np.unique(new_key[::-1], return_index=True)
    keep_new = np.sort(len(new_key) - 1 - last)
    old_key = g.src * g.n + g.dst
    keep_old = ~np.isin(old_key, new_key)
    src = np.concatenate([g.src[keep_old], np.asarray(new_src, np.int64)[keep_new]])
    dst = np.concatenate([g.dst[keep_old], np.asarray(new_dst, np.int64)[keep_new]])
    w = np.concatenate([g.weight[keep_old], np.asarray(new_w, float)[keep_new]])
    return WeightedDigraph(g.n, src, dst, w, g.labels, g.allow_self_loops)


def plant_anomalies(g: WeightedDigraph, w: float, seed=None, count_range=(5, 20),
                    size_range=(5, 20)) -> tuple[WeightedDigraph, GroundTruth]:
    """Plant randomly chosen heavy structures with Uniform(w, 1) weights.

    The number of structures, their kinds, sizes and node sets are drawn
    uniformly; trees always use 9 nodes in 5-3-1 shells.
    """
    if not 0 <= w <= 1:
        raise ValueError("w must lie in [0, 1]")
    rng = _rng(seed)
    count = int(rng.integers(count_range[0], count_range[1] + 1))
    specs, all_src, all_dst, all_w = [], [], [], []
    for _ in range(count):
        kind = KINDS[int(rng.integers(len(KINDS)))]
        size = sum(TREE_SHELLS) if kind == "tree" else int(rng.integers(size_range[0], size_range[1] + 1))
        if size > g.n:
            raise ValueError(f"cannot plant a {kind} of size {size} in {g.n} nodes")
        nodes = rng.choice(g.n, size=size, replace=False)
        edges = structure_edges(kind, nodes, rng)
        weights = rng.uniform(w, 1.0, size=len(edges)) if w < 1 else np.ones(len(edges))
        specs.append(AnomalySpec(kind, tuple(int(v) for v in nodes), tuple(edges), w))
        all_src += [e[0] for e in edges]
        all_dst += [e[1] for e in edges]
        all_w += weights.tolist()
    out = _replace_edges(g, all_src, all_dst, all_w)
    labels = np.zeros(g.n, dtype=np.int8)
    for s in specs:
        labels[list(s.nodes)] = 1
    return out, GroundTruth(labels, specs)


def heavy_weight_quantiles(u, mean=1000.0, sd=200.0):
    return mean + sd * special.ndtri(u)


def _accenture_degrees(n, rng, in_mean, in_sd, out_mean, out_sd):
    d_in = np.maximum(np.floor(rng.normal(in_mean, in_sd, n)), 0).astype(np.int64)
    d_out = np.maximum(np.floor(rng.normal(out_mean, out_sd, n)), 0).astype(np.int64)
    diff = int(d_in.sum() - d_out.sum())
    larger = d_in if diff > 0 else d_out
    for _ in range(abs(diff)):
        while True:
            v = int(rng.integers(n))
            if larger[v] > 0:
                larger[v] -= 1
                break
    return d_in, d_out


def _match_without_self_loops(d_in, d_out, rng, max_rounds=10_000):
    src = np.repeat(np.arange(len(d_out)), d_out)
    dst = rng.permutation(np.repeat(np.arange(len(d_in)), d_in))
    for _ in range(max_rounds):
        loops = np.flatnonzero(src == dst)
        if len(loops) == 0:
            return src, dst
        partners = rng.integers(len(src), size=len(loops))
        src[loops], src[partners] = src[partners], src[loops].copy()
    raise RuntimeError("could not remove self-loops from the stub matching")


def _sample_existing_path(g: WeightedDigraph, k: int, rng, attempts=10_000):
    order = np.argsort(g.src, kind="stable")
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(g.src, minlength=g.n), out=indptr[1:])
    nbrs = g.dst[order]
    for _ in range(attempts):
        path = [int(rng.integers(g.n))]
        while len(path) < k:
            u = path[-1]
            cand = [int(v) for v in nbrs[indptr[u]:indptr[u + 1]] if v not in path]
            if not cand:
                break
            path.append(cand[int(rng.integers(len(cand)))])
        if len(path) == k:
            return path
    raise RuntimeError(f"no simple path of size {k} found after {attempts} random walks")


def generate_accenture(seed=None, n: int = 55_000, in_mean=21.0, in_sd=3.0, out_mean=19.0,
                       out_sd=2.0, cliques=(8, 12), rings=(4, 10), paths=(5, 10),
                       heavy_range=(0.99, 0.99999)) -> tuple[WeightedDigraph, GroundTruth]:
    """Configuration-model network with fixed planted cliques, rings and paths.

    Heavy weights are Normal(1000, 200) quantiles of a Uniform draw on
    ``heavy_range``; ring edges share one heavy weight; paths reuse edges
    that already exist.
    """
    rng = _rng(seed)
    d_in, d_out = _accenture_degrees(n, rng, in_mean, in_sd, out_mean, out_sd)
    src, dst = _match_without_self_loops(d_in, d_out, rng)
    w = rng.normal(1000.0, 200.0, size=len(src))
    while np.any(w <= 0):
        bad = w <= 0
        w[bad] = rng.normal(1000.0, 200.0, size=int(bad.sum()))
    base = WeightedDigraph(n, src, dst, w)

    def heavy(size):
        return heavy_weight_quantiles(rng.uniform(*heavy_range, size=size))

    specs, ns, nd, nw = [], [], [], []
    for k in cliques:
        nodes = [int(v) for v in rng.choice(n, size=k, replace=False)]
        # one edge per pair, out-degrees k-1, k-2, ..., 0 inside the clique
        edges = [(nodes[i], nodes[j]) for i in range(k) for j in range(i + 1, k)]
        specs.append(AnomalySpec("clique", tuple(nodes), tuple(edges)))
        ns += [e[0] for e in edges]; nd += [e[1] for e in edges]; nw += heavy(len(edges)).tolist()
    for k in rings:
        nodes = [int(v) for v in rng.choice(n, size=k, replace=False)]
        edges = structure_edges("ring", nodes, rng)
        specs.append(AnomalySpec("ring", tuple(nodes), tuple(edges)))
        ns += [e[0] for e in edges]; nd += [e[1] for e in edges]; nw += [float(heavy(1)[0])] * len(edges)
    out = _replace_edges(base, ns, nd, nw)
    # heavy paths: reweight every parallel copy along an existing path
    weight = out.weight.copy()
    for k in paths:
        nodes = _sample_existing_path(out, k, rng)
        edges = structure_edges("path", nodes, rng)
        for a, b in edges:
            hit = np.flatnonzero((out.src == a) & (out.dst == b))
            weight[hit] = heavy(len(hit))
        specs.append(AnomalySpec("path", tuple(nodes), tuple(edges)))
    out = WeightedDigraph(n, out.src, out.dst, weight)
    labels = np.zeros(n, dtype=np.int8)
    for s in specs:
        labels[list(s.nodes)] = 1
    return out, GroundTruth(labels, specs)


def _log_comb(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def detectability_bound(q: BoundQuery) -> float:
    """Largest ``(1 - w) p`` keeping the expected background count of the
    structure below one, evaluated in log space."""
    n, k = q.n, q.k
    if q.kind == "clique":
        x = math.exp(-_log_comb(n, k) / (k * (k - 1) / 2))
        return float(-math.expm1(0.5 * math.log1p(-x)))
    if q.kind == "star":
        log_count = _log_comb(n, k) + _log_comb(k, q.k1) + math.log(k - q.k1)
        return float(math.exp(-log_count / (k - 1)))
    if q.kind == "path":
        return float(math.exp(-(_log_comb(n, k) + special.gammaln(k + 1)) / (k - 1)))
    if q.kind == "ring":
        return float(math.exp(-(_log_comb(n, k) + special.gammaln(k)) / k))
    log_count = math.log(4) + _log_comb(n, 9) + _log_comb(9, 5)
    return float(math.exp(-log_count / 18))


def training_grid(n: int) -> list[tuple[float, float]]:
    """(p, w) points with p in 0.001..0.005 and 1-w in 0..0.01 that satisfy
    the size-5 path bound."""
    if n < 5:
        raise ValueError("n must be at least 5")
    bound = detectability_bound(BoundQuery("path", n, 5))
    pts = []
    for i in range(1, 6):
        for j in range(0, 11):
            if i * j / 1e6 < bound:
                pts.append((i / 1000, round(1 - j / 1000, 3)))
    return pts


def expected_planted_nodes(count_range=(5, 20), size_range=(5, 20)) -> float:
    """Mean total structure size per network, ignoring overlaps."""
    mean_count = (count_range[0] + count_range[1]) / 2
    mean_size = (size_range[0] + size_range[1]) / 2
    return mean_count * ((len(KINDS) - 1) * mean_size + sum(TREE_SHELLS)) / len(KINDS)


def normal_quantile(q, mean=0.0, sd=1.0):
    return float(stats.norm.ppf(q, mean, sd))
