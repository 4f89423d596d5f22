"""Louvain modularity maximisation on an undirected weighted graph."""
from __future__ import annotations

import numpy as np
from scipy import sparse

from ._jit import njit


@njit
def local_moving(indptr, indices, data, k, order, comm, m2, resolution, min_gain):
    """One Louvain level: move nodes between communities until no pass
    improves modularity by more than ``min_gain``.  ``comm`` is updated in
    place; returns True if any node moved."""
    n = len(k)
    tot = np.zeros(n)
    for i in range(n):
        tot[comm[i]] += k[i]
    neigh_w = np.full(n, -1.0)
    neigh_c = np.empty(n, dtype=np.int64)
    moved_any = False
    improved = True
    while improved:
        improved = False
        gain_total = 0.0
        for idx in range(n):
            i = order[idx]
            ci = comm[i]
            ki = k[i]
            n_nb = 0
            neigh_w[ci] = 0.0
            neigh_c[n_nb] = ci
            n_nb += 1
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j == i:
                    continue
                cj = comm[j]
                if neigh_w[cj] < 0:
                    neigh_w[cj] = 0.0
                    neigh_c[n_nb] = cj
                    n_nb += 1
                neigh_w[cj] += data[p]
            tot[ci] -= ki
            best_c = ci
            best_gain = neigh_w[ci] - resolution * tot[ci] * ki / m2
            stay_gain = best_gain
            for t in range(n_nb):
                c = neigh_c[t]
                gain = neigh_w[c] - resolution * tot[c] * ki / m2
                if gain > best_gain:
                    best_gain = gain
                    best_c = c
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                moved_any = True
                gain_total += best_gain - stay_gain
            for t in range(n_nb):
                neigh_w[neigh_c[t]] = -1.0
        if gain_total / m2 > min_gain:
            improved = True
    return moved_any


def _relabel(comm: np.ndarray) -> np.ndarray:
    _, dense = np.unique(comm, return_inverse=True)
    return dense.astype(np.int64)


def modularity(adj, comm, resolution: float = 1.0) -> float:
    """Newman modularity of a partition of a symmetric weighted matrix."""
    a = sparse.csr_matrix(adj)
    m2 = a.sum()
    if m2 == 0:
        return 0.0
    k = np.asarray(a.sum(axis=1)).ravel()
    comm = np.asarray(comm)
    coo = a.tocoo()
    inside = coo.data[comm[coo.row] == comm[coo.col]].sum()
    tot = np.bincount(comm, weights=k)
    return float(inside / m2 - resolution * np.sum(tot ** 2) / m2 ** 2)


def louvain(adj, seed=0, resolution: float = 1.0, min_gain: float = 1e-7) -> np.ndarray:
    """Dense community labels for the symmetric weighted matrix ``adj``.

    Node sweep order at every level is a seeded permutation, so results
    are reproducible.  Returns the partition of the final (coarsest) level.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = sparse.csr_matrix(adj, dtype=np.float64)
    n = a.shape[0]
    node_comm = np.arange(n, dtype=np.int64)
    m2 = a.sum()
    if n == 0 or m2 == 0:
        return node_comm
    while True:
        a.sum_duplicates()
        a.sort_indices()
        k = np.asarray(a.sum(axis=1)).ravel()
        size = a.shape[0]
        comm = np.arange(size, dtype=np.int64)
        order = rng.permutation(size).astype(np.int64)
        moved = local_moving(a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data,
                             k, order, comm, m2, resolution, min_gain)
        if not moved:
            break
        comm = _relabel(comm)
        node_comm = comm[node_comm]
        agg = sparse.csr_matrix((np.ones(size), (np.arange(size), comm)), shape=(size, comm.max() + 1))
        a = (agg.T @ a @ agg).tocsr()
        if a.shape[0] == size:
            break
    return _relabel(node_comm)
