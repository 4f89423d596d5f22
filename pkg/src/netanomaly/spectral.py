"""Eigenvector slices of the symmetrised adjacency and two Laplacians."""
from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from .graph import WeightedDigraph, symmetrise

log = logging.getLogger(__name__)

OPERATORS = ("adj_upper", "adj_lower", "comb_laplacian", "rw_laplacian")
N_VECTORS = 20
DENSE_LIMIT = 600
SPARSE_TIMEOUT = 30.0
TIE_TOL = 1e-9


@dataclass
class SpectrumSlice:
    kind: str
    values: np.ndarray
    vectors: np.ndarray  # (n, k), unit columns

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


def trivial_count(kind: str) -> int:
    return 1 if kind in ("comb_laplacian", "rw_laplacian") else 0


def eigvec_count(n: int, kind: str) -> int:
    """Number of usable eigenvectors: min(20, non-trivial count)."""
    return max(0, min(N_VECTORS, n - trivial_count(kind)))


def _shuffle_ties(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Permutation that keeps ``values`` sorted but randomises tied runs."""
    order = np.arange(len(values))
    if len(values) < 2:
        return order
    scale = max(1.0, float(np.abs(values).max()))
    breaks = np.flatnonzero(np.abs(np.diff(values)) > TIE_TOL * scale) + 1
    for run in np.split(order, breaks):
        if len(run) > 1:
            order[run[0]:run[-1] + 1] = rng.permutation(run)
    return order


def _sym_normalised(w: np.ndarray):
    d = w.sum(axis=1)
    inv = np.zeros_like(d)
    pos = d > 0
    inv[pos] = 1.0 / np.sqrt(d[pos])
    return inv[:, None] * w * inv[None, :], inv, pos


def _dense_eigh(m: np.ndarray):
    return linalg.eigh(m, check_finite=False, driver="evr")


def _sparse_eigh(m, k: int, which: str):
    vals, vecs = eigsh(sparse.csr_matrix(m), k=k, which=which)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _eigh(m: np.ndarray, k: int, which: str, timeout: float = SPARSE_TIMEOUT):
    """Ascending eigenpairs; the ``k`` extreme ones when a sparse solve pays off."""
    n = m.shape[0]
    if n <= DENSE_LIMIT or k >= n - 1:
        return _dense_eigh(m)
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
    fut = pool.submit(_sparse_eigh, m, k, which)
    try:
        return fut.result(timeout=timeout)
    except concurrent.futures.TimeoutError:
        log.warning("sparse eigensolver exceeded %.0fs on n=%d; using dense", timeout, n)
    except Exception as exc:  # ARPACK non-convergence
        log.warning("sparse eigensolver failed (%s); using dense", exc)
    finally:
        pool.shutdown(wait=False)
    return _dense_eigh(m)


def _pick(vals, vecs, take: np.ndarray, kind: str, rng) -> SpectrumSlice:
    vals, vecs = vals[take], vecs[:, take]
    key = vals if kind in ("adj_lower", "comb_laplacian") else -vals
    order = np.argsort(key, kind="stable")
    order = order[_shuffle_ties(key[order], rng)]
    v = vecs[:, order]
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    return SpectrumSlice(kind, vals[order], v)


def _empty(kind: str, n: int) -> SpectrumSlice:
    return SpectrumSlice(kind, np.zeros(0), np.zeros((n, 0)))


def all_spectra(g: WeightedDigraph, rng=None, k: int = N_VECTORS) -> dict[str, SpectrumSlice]:
    """The four slices of one graph, sharing one adjacency eigensolve."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = g.n
    if n < 2:
        return {kind: _empty(kind, n) for kind in OPERATORS}
    w = symmetrise(g, dense=True)
    out = {}

    vals, vecs = _eigh(w, 2 * k, "BE")
    t = min(k, n)
    out["adj_upper"] = _pick(vals, vecs, np.arange(len(vals) - t, len(vals)), "adj_upper", rng)
    out["adj_lower"] = _pick(vals, vecs, np.arange(t), "adj_lower", rng)

    d = w.sum(axis=1)
    vals, vecs = _eigh(np.diag(d) - w, k + 1, "SA")
    t = min(k, n - 1)
    out["comb_laplacian"] = _pick(vals, vecs, np.arange(1, 1 + t), "comb_laplacian", rng)

    out["rw_laplacian"] = _rw_slice(w, k, rng)
    return out


def _rw_slice(w: np.ndarray, k: int, rng) -> SpectrumSlice:
    """Eigenpairs of ``D^-1 W`` via the symmetric ``D^-1/2 W D^-1/2``.

    Zero-degree rows of ``D^-1`` are taken as 0, so isolated nodes add
    eigenvalue 0 with a unit coordinate vector.
    """
    n = w.shape[0]
    norm, inv_sqrt, pos = _sym_normalised(w)
    live = np.flatnonzero(pos)
    vals = np.zeros(0)
    vecs = np.zeros((n, 0))
    if len(live):
        lv, lu = _eigh(norm[np.ix_(live, live)], k + 1, "LA")
        full = np.zeros((n, len(lv)))
        full[live] = inv_sqrt[live, None] * lu
        vals, vecs = lv, full
    dead = np.flatnonzero(~pos)
    if len(dead):
        vals = np.concatenate([vals, np.zeros(len(dead))])
        vecs = np.hstack([vecs, np.eye(n)[:, dead]])
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    t = min(k, n - 1)
    m = len(vals)
    # drop the top eigenvalue (1 for any graph with an edge)
    return _pick(vals, vecs, np.arange(max(0, m - 1 - t), m - 1), "rw_laplacian", rng)


def spectrum(g: WeightedDigraph, kind: str, rng=None, k: int = N_VECTORS) -> SpectrumSlice:
    """One slice; see :func:`all_spectra` when several are needed."""
    if kind not in OPERATORS:
        raise ValueError(f"unknown operator {kind!r}")
    if g.n < 2:
        raise ValueError("spectrum needs at least 2 nodes")
    return all_spectra(g, rng, k)[kind]


def operator_matrix(g: WeightedDigraph, kind: str) -> np.ndarray:
    """Dense operator whose eigenpairs a slice holds (for residual checks)."""
    w = symmetrise(g, dense=True)
    if kind in ("adj_upper", "adj_lower"):
        return w
    d = w.sum(axis=1)
    if kind == "comb_laplacian":
        return np.diag(d) - w
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    return inv[:, None] * w
