"""Beam search for heavy directed paths and the 30 path-size features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .graph import WeightedDigraph, csr_by_weight
from .nulls import ALPHA, NullEnsemble, monte_carlo_p, p_to_score

BEAM_WIDTH = 5000
MIN_SIZE = 3
MAX_SIZE = 32
DEFAULT_MAX_SIZE = 21
FEATURE_NAMES = tuple(f"path_{k}" for k in range(MIN_SIZE, MAX_SIZE + 1))


@njit
def _less(fit, paths, i, j):
    """Entry ``i`` is less fit than entry ``j`` (fitness, then lexicographic path)."""
    if fit[i] != fit[j]:
        return fit[i] < fit[j]
    for t in range(paths.shape[1]):
        if paths[i, t] != paths[j, t]:
            return paths[i, t] < paths[j, t]
    return False


@njit
def _swap(fit, paths, i, j):
    fit[i], fit[j] = fit[j], fit[i]
    for t in range(paths.shape[1]):
        paths[i, t], paths[j, t] = paths[j, t], paths[i, t]


@njit
def _sift_down(fit, paths, size, i):
    while True:
        lo = i
        a, b = 2 * i + 1, 2 * i + 2
        if a < size and _less(fit, paths, a, lo):
            lo = a
        if b < size and _less(fit, paths, b, lo):
            lo = b
        if lo == i:
            return
        _swap(fit, paths, i, lo)
        i = lo


@njit
def _sift_up(fit, paths, i):
    while i > 0:
        parent = (i - 1) // 2
        if _less(fit, paths, i, parent):
            _swap(fit, paths, i, parent)
            i = parent
        else:
            return


@njit
def _offer(fit, paths, size, cap, f, cand):
    """Push into a bounded min-heap (root = least fit).  Returns the new size.

    Slot ``cap`` is scratch space for the candidate.
    """
    fit[cap] = f
    paths[cap, :] = cand
    if size < cap:
        fit[size] = f
        paths[size, :] = cand
        _sift_up(fit, paths, size)
        return size + 1
    if _less(fit, paths, 0, cap):
        fit[0] = f
        paths[0, :] = cand
        _sift_down(fit, paths, size, 0)
    return size


@njit
def seed_kernel(n, in_ptr, in_src, in_w, out_ptr, out_dst, out_w, width):
    """Size-3 seed paths from the best in/out edge pairs at every node.

    The beam starts full of dummy paths of fitness 0.  At each middle node
    the best predecessor and successor are paired; while the pair beats
    the weakest beam entry it replaces it, and the side whose next edge is
    heavier advances.
    """
    fit = np.zeros(width + 1)
    paths = np.full((width + 1, 3), -1, dtype=np.int64)
    size = width
    cand = np.empty(3, dtype=np.int64)
    for c in range(n):
        i, i_end = in_ptr[c], in_ptr[c + 1]
        o, o_end = out_ptr[c], out_ptr[c + 1]
        if i == i_end or o == o_end:
            continue
        while True:
            a, b = in_src[i], out_dst[o]
            f = min(in_w[i], out_w[o])
            if a != b:
                if not fit[0] < f:
                    break
                cand[0], cand[1], cand[2] = a, c, b
                fit[width] = f
                paths[width, :] = cand
                fit[0] = f
                paths[0, :] = cand
                _sift_down(fit, paths, size, 0)
            more_in = i + 1 < i_end
            more_out = o + 1 < o_end
            if not more_in and not more_out:
                break
            if more_in and (not more_out or in_w[i + 1] > out_w[o + 1]):
                i += 1
            else:
                o += 1
    return fit[:width].copy(), paths[:width].copy()


@njit
def extend_kernel(fit_in, paths_in, out_ptr, out_dst, out_w, width):
    """All one-edge tail extensions of the beam that stay simple paths; top ``width`` kept."""
    k = paths_in.shape[1]
    fit = np.zeros(width + 1)
    paths = np.full((width + 1, k + 1), -1, dtype=np.int64)
    size = 0
    cand = np.empty(k + 1, dtype=np.int64)
    for p in range(fit_in.shape[0]):
        tail = paths_in[p, k - 1]
        if tail < 0:
            continue
        for e in range(out_ptr[tail], out_ptr[tail + 1]):
            nxt = out_dst[e]
            seen = False
            for t in range(k):
                if paths_in[p, t] == nxt:
                    seen = True
                    break
            if seen:
                continue
            cand[:k] = paths_in[p]
            cand[k] = nxt
            size = _offer(fit, paths, size, width, min(fit_in[p], out_w[e]), cand)
    return fit[:size].copy(), paths[:size].copy()


@dataclass
class Beam:
    fitness: np.ndarray
    paths: np.ndarray  # (count, size)

    @property
    def size(self) -> int:
        return self.paths.shape[1]

    def real(self) -> "Beam":
        keep = self.fitness > 0
        return Beam(self.fitness[keep], self.paths[keep])

    def ranked(self) -> "Beam":
        """Fittest first, ties by larger lexicographic path."""
        keys = [tuple(p) for p in self.paths]
        order = sorted(range(len(keys)), key=lambda i: (self.fitness[i], keys[i]), reverse=True)
        return Beam(self.fitness[order], self.paths[order])


def _path_csr(g: WeightedDigraph):
    """Heaviest copy of each arc; out- and in-lists sorted by weight, descending."""
    key = g.src.astype(np.int64) * g.n + g.dst
    order = np.lexsort((-g.weight, key))
    key = key[order]
    first = np.r_[True, key[1:] != key[:-1]]
    src, dst, w = g.src[order][first], g.dst[order][first], g.weight[order][first]
    out_ptr, out_dst, out_w = csr_by_weight(g.n, src, dst, w)
    in_ptr, in_src, in_w = csr_by_weight(g.n, dst, src, w)
    return (in_ptr, in_src, in_w), (out_ptr, out_dst, out_w)


def seed_paths(g: WeightedDigraph, beam_width: int = BEAM_WIDTH) -> Beam:
    (ip, isrc, iw), (op, odst, ow) = _path_csr(g)
    fit, paths = seed_kernel(g.n, ip, isrc, iw, op, odst, ow, beam_width)
    return Beam(fit, paths)


def extend_beam(beam: Beam, g: WeightedDigraph, beam_width: int = BEAM_WIDTH, csr=None) -> Beam:
    op, odst, ow = csr if csr is not None else _path_csr(g)[1]
    b = beam.real()
    fit, paths = extend_kernel(b.fitness, np.ascontiguousarray(b.paths), op, odst, ow, beam_width)
    return Beam(fit, paths)


def beams_by_size(g: WeightedDigraph, max_size: int = DEFAULT_MAX_SIZE,
                  beam_width: int = BEAM_WIDTH) -> dict[int, Beam]:
    """Real (non-dummy) beams for sizes 3..``max_size``."""
    if not MIN_SIZE <= max_size <= MAX_SIZE:
        raise ValueError(f"max_size must lie in [{MIN_SIZE}, {MAX_SIZE}]")
    out: dict[int, Beam] = {}
    if g.m == 0:
        return {k: Beam(np.zeros(0), np.zeros((0, k), dtype=np.int64)) for k in range(MIN_SIZE, max_size + 1)}
    (ip, isrc, iw), out_csr = _path_csr(g)
    beam = Beam(*seed_kernel(g.n, ip, isrc, iw, *out_csr, beam_width)).real()
    out[MIN_SIZE] = beam
    for k in range(MIN_SIZE + 1, max_size + 1):
        beam = extend_beam(beam, g, beam_width, out_csr)
        out[k] = beam
    return out


def path_features(g: WeightedDigraph, seed=0, n_replicas: int = 20, max_size: int = DEFAULT_MAX_SIZE,
                  beam_width: int = BEAM_WIDTH, alpha: float = ALPHA) -> np.ndarray:
    """``(n, 30)`` path scores; columns for sizes above ``max_size`` are zero.

    Each observed path is tested against the best same-size fitness that
    the beam search reaches on each configuration replica (0 when a
    replica has no such path).  A node collects the score of every
    significant path it lies on.
    """
    feats = np.zeros((g.n, len(FEATURE_NAMES)))
    if g.m == 0:
        return feats
    observed = beams_by_size(g, max_size, beam_width)
    ens = NullEnsemble.build(g, n_replicas, seed, stream=600)
    null_beams = ens.map(lambda r: beams_by_size(r, max_size, beam_width))
    for k, beam in observed.items():
        if len(beam.fitness) == 0:
            continue
        best = np.array([nb[k].fitness.max() if len(nb[k].fitness) else 0.0 for nb in null_beams])
        scores = np.atleast_1d(p_to_score(monte_carlo_p(beam.fitness, best, "upper"), alpha))
        hit = scores > 0
        if hit.any():
            np.add.at(feats[:, k - MIN_SIZE], beam.paths[hit].ravel(), np.repeat(scores[hit], k))
    return feats
