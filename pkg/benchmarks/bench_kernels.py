"""Compiled kernels against their interpreted ``.py_func`` versions.

    python3 benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Prints one row per kernel: best-of-N wall time for each path, the speed-up,
and whether both paths returned the same result.  Compile time is excluded
(one warm-up call first).
"""
import argparse
import time

import numpy as np

from netanomaly import _jit
from netanomaly.generators import generate_weighted_er
from netanomaly.graph import symmetrise
from netanomaly.localisation import column_stats
from netanomaly.louvain import local_moving
from netanomaly.netemd import TRIAD_TABLE, _emd_sorted, triad_kernel
from netanomaly.oddball import egonet_kernel
from netanomaly.pathfinder import _path_csr, extend_kernel, seed_kernel


def best_of(fn, args, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return bool(np.allclose(a, b, atol=1e-9)) if np.ndim(a) or isinstance(a, float) else a == b


def cases(n):
    g = generate_weighted_er(n, 5.0 / n * 2, seed=0)
    (ip, isrc, iw), (op, odst, ow) = _path_csr(g)
    fit, paths = seed_kernel(g.n, ip, isrc, iw, op, odst, ow, 500)
    keep = fit > 0
    fit, paths = fit[keep], np.ascontiguousarray(paths[keep])

    s = g.simple()
    a = s.adjacency().tocsr()
    a.sort_indices()
    at = a.T.tocsr()
    at.sort_indices()
    und = (a + at).tocsr()
    und.sort_indices()
    ptr = np.concatenate([a.indptr, a.indptr[-1] + at.indptr[1:]]).astype(np.int64)
    idx = np.concatenate([a.indices, at.indices]).astype(np.int64)
    w = np.concatenate([a.data, at.data])
    und_ptr, und_idx = und.indptr.astype(np.int64), und.indices.astype(np.int64)

    sym = symmetrise(g, dense=False)
    sym.sort_indices()
    k = np.asarray(sym.sum(axis=1)).ravel()
    order = np.random.default_rng(0).permutation(n).astype(np.int64)

    rng = np.random.default_rng(1)
    vecs = rng.normal(size=(min(n, 600), 20))
    x, y = np.sort(rng.normal(size=n)), np.sort(rng.exponential(size=n // 2))

    def louvain_pass(fn):
        comm = np.arange(n, dtype=np.int64)
        fn(sym.indptr.astype(np.int64), sym.indices.astype(np.int64), sym.data, k, order, comm, sym.sum(), 1.0, 1e-7)
        return comm

    return [
        ("pathfinder.seed_kernel", seed_kernel, (g.n, ip, isrc, iw, op, odst, ow, 500)),
        ("pathfinder.extend_kernel", extend_kernel, (fit, paths, op, odst, ow, 500)),
        ("oddball.egonet_kernel", egonet_kernel, (n, und_ptr, und_idx, ptr, idx, w)),
        ("netemd.triad_kernel", triad_kernel,
         (n, a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, und_ptr, und_idx, TRIAD_TABLE, 13)),
        ("netemd._emd_sorted", _emd_sorted, (x, y)),
        ("localisation.column_stats", column_stats, (vecs, 20, 0.9, 1e-12)),
        ("louvain.local_moving", louvain_pass, None),
    ], local_moving


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _jit.USE_NUMBA:
        raise SystemExit("numba is disabled (NETANOMALY_DISABLE_NUMBA); nothing to compare")

    rows, local_moving = cases(args.n)
    print(f"{'kernel':28s} {'numba s':>10s} {'python s':>10s} {'speed-up':>9s}  same")
    for name, fn, fargs in rows:
        if fargs is None:  # louvain pass mutates its input, wrap it
            jit_fn, py_fn, fargs = (lambda: fn(local_moving)), (lambda: fn(local_moving.py_func)), ()
        else:
            jit_fn, py_fn = fn, fn.py_func
        jit_fn(*fargs)  # compile
        t_jit, out_jit = best_of(jit_fn, fargs, args.repeat)
        t_py, out_py = best_of(py_fn, fargs, 1)
        print(f"{name:28s} {t_jit:10.4f} {t_py:10.4f} {t_py / max(t_jit, 1e-9):8.1f}x  {same(out_jit, out_py)}")


if __name__ == "__main__":
    main()
