"""NetEMD distance, motif and eigenvector node statistics, and the 40 NetEMD features."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._jit import njit
from .graph import WeightedDigraph
from .nulls import ALPHA, NullEnsemble, monte_carlo_p
from .spectral import OPERATORS, all_spectra

POINT_MASS_RANGE = 1e-10
N_EIGEN = 5
MIN_EIGEN_NODES = 6
LATE_EIGEN_NODES = 4
Z_THRESHOLD = 2.0
TOP_SHARE = 0.05

# Connected directed triads; each entry lists the edges of one copy on nodes 0, 1, 2.
TRIADS = {
    "021D": ((1, 0), (1, 2)),
    "021U": ((0, 1), (2, 1)),
    "021C": ((0, 1), (1, 2)),
    "111D": ((0, 1), (1, 0), (2, 1)),
    "111U": ((0, 1), (1, 0), (1, 2)),
    "030T": ((0, 1), (2, 1), (0, 2)),
    "030C": ((1, 0), (2, 1), (0, 2)),
    "201": ((0, 1), (1, 0), (1, 2), (2, 1)),
    "120D": ((1, 0), (1, 2), (0, 2), (2, 0)),
    "120U": ((0, 1), (2, 1), (0, 2), (2, 0)),
    "120C": ((0, 1), (1, 2), (0, 2), (2, 0)),
    "210": ((0, 1), (1, 2), (2, 1), (0, 2), (2, 0)),
    "300": ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)),
}
TRIAD_NAMES = tuple(TRIADS)
STRENGTH_NAMES = ("out_strength", "in_strength", "total_strength")
MOTIF_NAMES = STRENGTH_NAMES + TRIAD_NAMES
N_MOTIF = len(MOTIF_NAMES)

# bit order of the 6 possible arcs among positions 0, 1, 2
_ARCS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))

FEATURE_NAMES = tuple(
    [f"motif_{i + 1}_score{s}" for i in range(N_MOTIF) for s in (1, 2)]
    + [f"{op}_netemd_score{s}" for op in OPERATORS for s in (1, 2)]
)


def _code(arcs) -> int:
    return sum(1 << _ARCS.index(a) for a in arcs)


def _canonical(code: int) -> int:
    arcs = [a for b, a in enumerate(_ARCS) if code >> b & 1]
    return min(_code([(p[a], p[b]) for a, b in arcs]) for p in itertools.permutations(range(3)))


def _triad_table() -> np.ndarray:
    ids = {_canonical(_code(arcs)): t for t, arcs in enumerate(TRIADS.values())}
    return np.array([ids.get(_canonical(c), -1) for c in range(64)], dtype=np.int64)


TRIAD_TABLE = _triad_table()


@njit
def _arc_weight(indptr, indices, data, u, v):
    lo, hi = indptr[u], indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < indptr[u + 1] and indices[lo] == v:
        return data[lo]
    return 0.0


@njit
def triad_kernel(n, out_ptr, out_idx, out_w, und_ptr, und_idx, table, n_types):
    """Weighted induced-triad participation per node.

    Each connected triple is visited once: open wedges at their centre,
    triangles at their smallest node.
    """
    out = np.zeros((n, n_types))
    nodes = np.empty(3, dtype=np.int64)
    for c in range(n):
        lo, hi = und_ptr[c], und_ptr[c + 1]
        for p in range(lo, hi):
            a = und_idx[p]
            for q in range(p + 1, hi):
                b = und_idx[q]
                closed = (_arc_weight(out_ptr, out_idx, out_w, a, b) > 0
                          or _arc_weight(out_ptr, out_idx, out_w, b, a) > 0)
                if closed and (a < c or b < c):
                    continue
                nodes[0] = c
                nodes[1] = a
                nodes[2] = b
                code = 0
                prod = 1.0
                bit = 0
                for x, y in ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)):
                    w = _arc_weight(out_ptr, out_idx, out_w, nodes[x], nodes[y])
                    if w > 0:
                        code |= 1 << bit
                        prod *= w
                    bit += 1
                t = table[code]
                if t >= 0:
                    out[c, t] += prod
                    out[a, t] += prod
                    out[b, t] += prod
    return out


def motif_statistics(g: WeightedDigraph) -> np.ndarray:
    """``(n, 16)``: out-, in- and total strength, then weighted triad counts."""
    s = g.simple()
    out = np.zeros((g.n, N_MOTIF))
    out[:, 0] = np.bincount(s.src, weights=s.weight, minlength=g.n)
    out[:, 1] = np.bincount(s.dst, weights=s.weight, minlength=g.n)
    out[:, 2] = out[:, 0] + out[:, 1]
    if s.m == 0:
        return out
    a = s.adjacency()
    a.sort_indices()
    u = (a + a.T).tocsr()
    u.sort_indices()
    out[:, 3:] = triad_kernel(
        g.n, a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.astype(np.float64),
        u.indptr.astype(np.int64), u.indices.astype(np.int64), TRIAD_TABLE, len(TRIADS))
    return out


def choose_sign(v, tol: float = 1e-9, max_power: int = 200) -> np.ndarray:
    """Fix the arbitrary sign of an eigenvector : majority sign wins, then the first nonzero odd moment."""
    v = np.asarray(v, dtype=float)
    scale = np.abs(v).max() if v.size else 0.0
    if scale == 0:
        return v
    x = v / scale
    srt = np.sort(x)
    if np.allclose(srt, -srt[::-1], rtol=0, atol=tol):
        return v
    pos, neg = int(np.sum(x > tol)), int(np.sum(x < -tol))
    if pos != neg:
        return v if pos > neg else -v
    for a in range(max_power + 1):
        g = float(np.sum(x ** (2 * a + 1)))
        if abs(g) > tol:
            return v if g > 0 else -v
    return v


def standardise(x) -> np.ndarray:
    """Values divided by their population standard deviation, sorted.

    Near-constant samples (range below 1e-10) become a point mass at 0.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if np.ptp(x) < POINT_MASS_RANGE:
        return np.zeros(x.size)
    return np.sort(x / x.std())


@njit
def _emd_sorted(x, y):
    """Min over shifts of the L1 distance between the EDFs of sorted ``x`` and ``y``.

    The L1 distance is the integral over ``u`` in (0, 1) of |Qx(u) - Qy(u) - s|,
    with piecewise-constant quantile functions, so the best ``s`` is a
    weighted median of the quantile differences.
    """
    n, m = x.shape[0], y.shape[0]
    d = np.empty(n + m)
    length = np.empty(n + m, dtype=np.int64)
    i = j = 0
    pos = 0
    k = 0
    # breakpoints at i/n and j/m, compared exactly in units of 1/(n*m)
    while i < n and j < m:
        nxt = min((i + 1) * m, (j + 1) * n)
        d[k] = x[i] - y[j]
        length[k] = nxt - pos
        k += 1
        pos = nxt
        if (i + 1) * m == nxt:
            i += 1
        if (j + 1) * n == nxt:
            j += 1
    d = d[:k]
    length = length[:k]
    order = np.argsort(d)
    half = n * m
    acc = 0
    s = d[order[-1]]
    for t in range(k):
        acc += 2 * length[order[t]]
        if acc >= half:
            s = d[order[t]]
            break
    total = 0.0
    for t in range(k):
        total += length[t] * abs(d[t] - s)
    return total / half


@njit
def emd_batch(values, offsets, left, right):
    """Distances for index pairs ``(left[p], right[p])`` of packed sorted samples."""
    out = np.empty(left.shape[0])
    for p in range(left.shape[0]):
        a, b = left[p], right[p]
        out[p] = _emd_sorted(values[offsets[a]:offsets[a + 1]], values[offsets[b]:offsets[b + 1]])
    return out


def netemd_distance(x, y) -> float:
    """Shift-minimised L1 distance between standardised empirical distributions."""
    return float(_emd_sorted(standardise(x), standardise(y)))


def shifted_l1(x, y, s: float) -> float:
    """L1 distance between the EDFs of sorted ``x`` and ``y + s``."""
    pts = np.sort(np.concatenate([x, y + s]))
    mids = pts[:-1]
    fx = np.searchsorted(x, mids, side="right") / len(x)
    fy = np.searchsorted(y + s, mids, side="right") / len(y)
    return float(np.sum(np.abs(fx - fy) * np.diff(pts)))


def netemd_ternary(x, y, iters: int = 200) -> float:
    """Cross-check for :func:`netemd_distance` by ternary search on the convex shift objective."""
    x, y = standardise(x), standardise(y)
    lo, hi = float(x.min() - y.max()), float(x.max() - y.min())
    for _ in range(iters):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if shifted_l1(x, y, m1) <= shifted_l1(x, y, m2):
            hi = m2
        else:
            lo = m1
    return shifted_l1(x, y, (lo + hi) / 2)


def eigen_statistics(g: WeightedDigraph, rng=None, k: int = N_EIGEN) -> dict[str, np.ndarray]:
    """Sign-fixed eigenvectors, ``(n, <=k)`` per operator."""
    spectra = all_spectra(g, rng, k)
    out = {}
    for kind in OPERATORS:
        v = spectra[kind].vectors
        out[kind] = np.column_stack([choose_sign(v[:, i]) for i in range(v.shape[1])]) if v.shape[1] else v
    return out


def statistic_table(g: WeightedDigraph, rng, eigen: bool) -> list:
    """Columns of node statistics: 16 motif ones, or 4 x 5 eigenvector ones (None if absent)."""
    if not eigen:
        m = motif_statistics(g)
        return [m[:, i] for i in range(N_MOTIF)]
    ev = eigen_statistics(g, rng)
    return [ev[kind][:, i] if ev[kind].shape[1] > i else None for kind in OPERATORS for i in range(N_EIGEN)]


def trimmed_mean(d) -> float:
    """Mean after dropping one largest and one smallest value (plain mean below 3)."""
    d = np.sort(np.asarray(d, dtype=float))
    if d.size == 0:
        return math.nan
    return float(d.mean() if d.size < 3 else d[1:-1].mean())


def deviation_pvalues(observed: list, references: list[list], nulls: list[list]) -> list:
    """Per statistic: trimmed mean distance to the references and its Monte Carlo p.

    Graphs lacking a statistic (None) drop out of that statistic's comparison.
    Returns ``(deviation, p)`` per statistic, or ``None`` when untestable.
    """
    out = []
    for s, obs in enumerate(observed):
        refs = [r[s] for r in references if r[s] is not None]
        null = [r[s] for r in nulls if r[s] is not None]
        if obs is None or not refs or not null:
            out.append(None)
            continue
        samples = [standardise(obs)] + [standardise(r) for r in refs] + [standardise(x) for x in null]
        offsets = np.zeros(len(samples) + 1, dtype=np.int64)
        np.cumsum([len(x) for x in samples], out=offsets[1:])
        values = np.concatenate(samples)
        nr = len(refs)
        ref_idx = np.arange(1, nr + 1)
        left = np.repeat(np.r_[0, np.arange(nr + 1, len(samples))], nr)
        right = np.tile(ref_idx, len(null) + 1)
        dist = emd_batch(values, offsets, left, right).reshape(len(null) + 1, nr)
        dev = np.array([trimmed_mean(row) for row in dist])
        out.append((float(dev[0]), monte_carlo_p(dev[0], dev[1:], "upper")))
    return out


def node_scores(t, p: float):
    """Scores 1 and 2 for a significant statistic with node values ``t``."""
    t = np.asarray(t, dtype=float)
    sd = t.std()
    s1 = np.zeros(t.size)
    s2 = np.zeros(t.size)
    if sd == 0 or t.size == 0:
        return s1, s2
    az = np.abs((t - t.mean()) / sd)
    s1[az >= Z_THRESHOLD] = az[az >= Z_THRESHOLD]
    top = math.ceil(TOP_SHARE * t.size)
    cut = np.sort(az)[::-1][top - 1]
    hit = (az >= cut) & (az > 0)
    s2[hit] = max(float(-special.ndtri(max(p, 1e-300))), 0.0)
    return s1, s2


@dataclass
class NetEMDResult:
    features: np.ndarray  # (n, 40)
    tests: list


def netemd_features(g: WeightedDigraph, aug: WeightedDigraph, seed=0, n_reference: int = 15,
                    n_null: int = 100, alpha: float = ALPHA) -> NetEMDResult:
    """40 NetEMD features for one community.

    ``g`` is the community subgraph of the original network (motifs), ``aug``
    the same nodes in the augmented network (eigenvectors).
    """
    n = g.n
    feats = np.zeros((n, len(FEATURE_NAMES)))
    tests = []
    for eigen, base in ((False, g), (True, aug)):
        if base.m == 0 or (eigen and n < 2):
            continue
        stream = 500 if eigen else 400
        # a community smaller than the minimum can only ever resample to its own size
        kw = dict(min_eigvecs=min(MIN_EIGEN_NODES, n), late_min_nodes=min(LATE_EIGEN_NODES, n)) if eigen else {}
        ref = NullEnsemble.build(base, n_reference, seed, stream=stream, **kw)
        null = NullEnsemble.build(base, n_null, seed, stream=stream + 1, **kw)
        rng = np.random.default_rng([int(seed), stream + 2])
        obs = statistic_table(base, rng, eigen)
        refs = ref.map(lambda r: statistic_table(r, rng, eigen))
        nulls = null.map(lambda r: statistic_table(r, rng, eigen))
        for s, res in enumerate(deviation_pvalues(obs, refs, nulls)):
            tests.append((eigen, s, res))
            if res is None or res[1] >= alpha:
                continue
            s1, s2 = node_scores(obs[s], res[1])
            col = 2 * N_MOTIF + 2 * (s // N_EIGEN) if eigen else 2 * s
            feats[:, col] += s1
            feats[:, col + 1] += s2
    return NetEMDResult(feats, tests)
