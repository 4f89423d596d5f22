"""Eigenvector localisation statistics and the 60 per-node localisation features."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._jit import njit
from .graph import WeightedDigraph
from .nulls import ALPHA, NullEnsemble, monte_carlo_p, p_to_score
from .spectral import OPERATORS, SpectrumSlice, all_spectra, eigvec_count, trivial_count

ZERO_TOL = 1e-12
DIRECT_SHARE = 0.9
ELEMENT_ALPHA = 0.5

COLUMNS = (
    "ipr_norm1", "ipr_norm2", "ipr_norm3", "ipr_norm4",
    "exp_norm1", "exp_norm2", "exp_norm3", "exp_norm4",
    "dl90_ipr", "dl90_abs",
    "sign1", "sign2", "sign_equal1", "sign_equal2",
    "abs_eigvec",
)
FEATURE_NAMES = tuple(f"{op}_{c}" for op in OPERATORS for c in COLUMNS)
STATS = ("ipr", "exp", "sign", "dl_ipr", "dl_abs", "max_abs")
TAILS = {"ipr": "upper", "exp": "upper", "sign": "lower", "dl_ipr": "lower", "dl_abs": "lower"}


def ipr(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sum(v ** 4))


def exp_stat(v) -> float:
    a = np.abs(np.asarray(v, dtype=float))
    return float(np.sum(np.expm1(a) - a))


def sign_counts(v, tol: float = ZERO_TOL) -> tuple[int, int]:
    v = np.asarray(v, dtype=float)
    return int(np.sum(v > tol)), int(np.sum(v < -tol))


def sign_stat(v, count: int) -> float:
    """Smaller sign count over ``count``, with an empty sign counted as ``count``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pos, neg = sign_counts(v)
    return min(pos + (pos == 0) * count, neg + (neg == 0) * count) / count


def _basis(v: np.ndarray, basis: str) -> np.ndarray:
    if basis == "fourth_power":
        return v ** 4
    if basis == "abs":
        return np.abs(v)
    raise ValueError(f"unknown basis {basis!r}")


def direct_loc_members(v, basis: str = "fourth_power", share: float = DIRECT_SHARE) -> np.ndarray:
    """Indices of the fewest largest entries holding ``share`` of the basis sum,
    plus every entry exactly tied with the smallest one taken."""
    b = _basis(np.asarray(v, dtype=float), basis)
    if b.size == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-b, kind="stable")
    csum = np.cumsum(b[order])
    k = int(np.searchsorted(csum, share * csum[-1] * (1 - 1e-12), side="left")) + 1
    k = min(k, b.size)
    cut = b[order[k - 1]]
    return np.flatnonzero(b >= cut)


def direct_loc_count(v, basis: str = "fourth_power") -> int:
    return int(len(direct_loc_members(v, basis)))


@njit
def _direct_count(b, share):
    n = b.shape[0]
    if n == 0:
        return 0
    s = np.sort(b)[::-1]
    total = s.sum()
    target = share * total * (1 - 1e-12)
    acc = 0.0
    k = n
    for i in range(n):
        acc += s[i]
        if acc >= target:
            k = i + 1
            break
    cut = s[k - 1]
    while k < n and s[k] == cut:
        k += 1
    return k


@njit
def column_stats(vecs, count, share, tol):
    """Per-column ipr, exp, sign, direct counts (fourth power, abs) and max |entry|."""
    n, k = vecs.shape
    out = np.zeros((6, k))
    for j in range(k):
        v = vecs[:, j]
        a = np.abs(v)
        out[0, j] = np.sum(a ** 4)
        out[1, j] = np.sum(np.exp(a) - a - 1.0)
        pos = 0
        neg = 0
        for i in range(n):
            if v[i] > tol:
                pos += 1
            elif v[i] < -tol:
                neg += 1
        if pos == 0:
            pos += count
        if neg == 0:
            neg += count
        out[2, j] = min(pos, neg) / count if count > 0 else 0.0
        out[3, j] = _direct_count(a ** 4, share)
        out[4, j] = _direct_count(a, share)
        out[5, j] = a.max() if n else 0.0
    return out


def slice_stats(sl: SpectrumSlice, n: int) -> np.ndarray:
    """``(6, k)`` statistics for every vector of a slice (rows as ``STATS``)."""
    vecs = np.ascontiguousarray(sl.vectors, dtype=np.float64)
    return column_stats(vecs, max(eigvec_count(n, sl.kind), 1), DIRECT_SHARE, ZERO_TOL)


@dataclass
class NullStats:
    """Per operator, per eigenvector index: null statistic samples."""
    samples: dict[str, list[np.ndarray]] = field(default_factory=dict)

    def at(self, kind: str, i: int) -> np.ndarray:
        """``(6, m_i)`` samples from replicas that have an ``i``-th vector."""
        cols = [s[:, i] for s in self.samples.get(kind, []) if s.shape[1] > i]
        return np.array(cols).T if cols else np.zeros((6, 0))


def null_stats(g: WeightedDigraph, n_replicas: int, seed, share_operators: bool = False) -> NullStats:
    """Replica statistics; one ensemble per matrix unless ``share_operators``.

    Adjacency upper/lower share the adjacency ensemble; each Laplacian
    gets its own, resampled to carry one extra (trivial) eigenvector.
    """
    out = NullStats()
    need = eigvec_count(g.n, "adj_upper")
    groups = [(("adj_upper", "adj_lower", "comb_laplacian", "rw_laplacian"), 0)] if share_operators else [
        (("adj_upper", "adj_lower"), 0), (("comb_laplacian",), 1), (("rw_laplacian",), 2)]
    for kinds, stream in groups:
        triv = max(trivial_count(k) for k in kinds)
        ens = NullEnsemble.build(g, n_replicas, seed, stream=100 + stream,
                                 min_eigvecs=max(1, min(need, g.n - triv)), trivial=triv)
        for r, rep in enumerate(ens.replicas):
            spectra = all_spectra(rep, np.random.default_rng([int(seed), 200 + stream, r]))
            for kind in kinds:
                out.samples.setdefault(kind, []).append(slice_stats(spectra[kind], rep.n))
    return out


def _z(p) -> np.ndarray:
    return -special.ndtri(np.clip(p, 1e-300, 1.0))


@dataclass
class LocalisationResult:
    features: np.ndarray  # (n, 60)
    pvalues: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)


def _norm_scores(v: np.ndarray, p: float, max_null: np.ndarray) -> np.ndarray:
    """Four node scores for one significant vector (norm-based tests)."""
    a = np.abs(v)
    out = np.zeros((len(v), 4))
    out[:, 0] = math.sqrt(len(v)) * a
    if max_null.size:
        t = monte_carlo_p(a, max_null, "upper")
        out[:, 1] = np.where(t < ELEMENT_ALPHA, np.maximum(_z(t), 0.0), 0.0)
        hit = a >= max_null.mean()
        out[hit, 2] = max(float(_z(p)), 0.0)
        out[hit, 3] = a[hit]
    return out


def _sign_scores(v: np.ndarray, p: float):
    """SignStat1/2 and SignStatEqual1/2 contributions, plus a large-count flag."""
    n = len(v)
    pos, neg = sign_counts(v)
    large = min(pos, neg) >= n / 2
    pos_h = pos + (pos == 0) * n
    neg_h = neg + (neg == 0) * n
    z = float(_z(p))
    is_pos, is_neg = v > ZERO_TOL, v < -ZERO_TOL
    out = np.zeros((n, 4))
    if pos_h < neg_h:
        out[is_pos, 0] = z
        out[is_pos, 1] = z / pos_h
    elif pos_h > neg_h:
        out[is_neg, 0] = z
        out[is_neg, 1] = z / neg_h
    else:
        hit = is_pos | is_neg
        out[hit, 2] = z
        out[hit, 3] = z / (pos_h + neg_h)
    return out, large


def localisation_features(g: WeightedDigraph, seed=0, n_replicas: int = 500, alpha: float = ALPHA,
                          share_operators: bool = False, nulls: NullStats | None = None,
                          spectra: dict | None = None) -> LocalisationResult:
    """60 localisation features for the nodes of one (augmented) community."""
    n = g.n
    feats = np.zeros((n, len(FEATURE_NAMES)))
    res = LocalisationResult(feats)
    if n < 2 or g.m == 0:
        return res
    if spectra is None:
        spectra = all_spectra(g, np.random.default_rng([int(seed), 300]))
    if nulls is None:
        nulls = null_stats(g, n_replicas, seed, share_operators)
    width = len(COLUMNS)
    for o, kind in enumerate(OPERATORS):
        sl = spectra[kind]
        obs = slice_stats(sl, n)
        block = np.zeros((n, width))
        for i in range(sl.k):
            null = nulls.at(kind, i)
            if null.shape[1] == 0:
                continue
            v = sl.vectors[:, i]
            ps = {s: monte_carlo_p(obs[STATS.index(s), i], null[STATS.index(s)], TAILS[s]) for s in TAILS}
            res.pvalues[(kind, i)] = ps
            for c, s in ((0, "ipr"), (4, "exp")):
                if ps[s] < alpha:
                    block[:, c:c + 4] += _norm_scores(v, ps[s], null[STATS.index("max_abs")])
            for c, s, basis in ((8, "dl_ipr", "fourth_power"), (9, "dl_abs", "abs")):
                if ps[s] < alpha:
                    block[direct_loc_members(v, basis), c] += p_to_score(ps[s], alpha)
            if ps["sign"] < alpha:
                scores, large = _sign_scores(v, ps["sign"])
                if large:
                    res.diagnostics.append({"operator": kind, "index": i, "p": ps["sign"],
                                            "large_number": scores})
                else:
                    block[:, 10:14] += scores
        feats[:, o * width:(o + 1) * width] = block
    return res
