"""Weighted directed graphs, edge-list I/O and elementary transforms."""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import sparse


class GraphError(ValueError):
    """Invalid graph content (non-positive weight, self-loop, empty graph)."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


_NODES_HINT = re.compile(r"#\s*nodes\s*=\s*(\d+)")


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Directed graph on nodes ``0..n-1`` with positive edge weights.

    Edges are kept as three parallel arrays.  Parallel edges are allowed and
    stored explicitly; transforms that need a simple graph sum them.
    ``labels`` maps dense indices back to the original node labels.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    labels: tuple | None = None
    allow_self_loops: bool = False

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        w = np.ascontiguousarray(self.weight, dtype=np.float64)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)
        if self.n < 1:
            raise GraphError("graph needs at least one node")
        if not (len(src) == len(dst) == len(w)):
            raise GraphError("edge arrays differ in length")
        if len(w):
            if not np.all(w > 0):
                raise GraphError("all edge weights must be positive")
            if src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= self.n:
                raise GraphError("edge endpoint outside 0..n-1")
            if not self.allow_self_loops and np.any(src == dst):
                raise GraphError("self-loops are not permitted")
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphError("labels must cover every node")
        for a in (src, dst, w):
            a.flags.writeable = False

    @property
    def m(self) -> int:
        return len(self.weight)

    def label(self, i: int):
        return i if self.labels is None else self.labels[i]

    def node_labels(self) -> list:
        return list(range(self.n)) if self.labels is None else list(self.labels)

    def adjacency(self) -> sparse.csr_matrix:
        """Sparse ``W`` with parallel edges summed."""
        return sparse.csr_matrix((self.weight, (self.src, self.dst)), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        np.add.at(a, (self.src, self.dst), self.weight)
        return a

    def simple(self) -> "WeightedDigraph":
        """Collapse parallel edges into one edge carrying the summed weight."""
        if self.m == 0:
            return self
        key = self.src * self.n + self.dst
        uniq, inv = np.unique(key, return_inverse=True)
        if len(uniq) == self.m:
            return self
        w = np.bincount(inv, weights=self.weight)
        return WeightedDigraph(self.n, uniq // self.n, uniq % self.n, w, self.labels, self.allow_self_loops)

    def subgraph(self, nodes: Sequence[int]) -> "WeightedDigraph":
        """Induced subgraph; node ``nodes[i]`` becomes node ``i``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[nodes] = np.arange(len(nodes))
        keep = (pos[self.src] >= 0) & (pos[self.dst] >= 0)
        labels = None if self.labels is None else tuple(self.labels[i] for i in nodes)
        return WeightedDigraph(
            len(nodes), pos[self.src[keep]], pos[self.dst[keep]], self.weight[keep],
            labels, self.allow_self_loops,
        )

    def degrees(self) -> tuple[np.ndarray, np.ndarray]:
        """(in-degree, out-degree) edge counts, parallel edges counted."""
        return (np.bincount(self.dst, minlength=self.n), np.bincount(self.src, minlength=self.n))


@dataclass
class GroundTruth:
    """Anomalous node set plus the planted structures that produced it."""

    labels: np.ndarray
    structures: list = field(default_factory=list)

    @property
    def anomalous(self) -> np.ndarray:
        return np.flatnonzero(self.labels)


def load_edge_list(stream: TextIO | str, allow_self_loops: bool = False) -> WeightedDigraph:
    """Parse ``src,dst,weight`` lines into a graph with dense node indices.

    ``#`` starts a comment.  A ``# nodes=N`` comment declares integer labels
    ``0..N-1`` up front, so isolated nodes survive a round trip.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    index: dict = {}
    labels: list = []
    src, dst, wts = [], [], []

    def node(tok):
        if tok not in index:
            index[tok] = len(labels)
            labels.append(tok)
        return index[tok]

    for lineno, line in enumerate(stream, 1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            hint = _NODES_HINT.match(text)
            if hint and not labels:
                for i in range(int(hint.group(1))):
                    node(str(i))
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise EdgeListParseError(lineno, line, "expected src,dst,weight")
        try:
            w = float(parts[2])
        except ValueError:
            raise EdgeListParseError(lineno, line, "weight is not a number") from None
        if not w > 0 or not np.isfinite(w):
            raise EdgeListParseError(lineno, line, "weight must be positive")
        if parts[0] == parts[1] and not allow_self_loops:
            raise EdgeListParseError(lineno, line, "self-loop not permitted")
        src.append(node(parts[0]))
        dst.append(node(parts[1]))
        wts.append(w)
    if not labels:
        raise GraphError("empty graph")
    return WeightedDigraph(len(labels), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                           np.array(wts, dtype=np.float64), tuple(labels), allow_self_loops)


def write_edge_list(g: WeightedDigraph, stream: TextIO) -> None:
    """Inverse of :func:`load_edge_list`; ``repr`` keeps weights exact."""
    if g.labels is None:
        stream.write(f"# nodes={g.n}\n")
    for s, d, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
        stream.write(f"{g.label(s)},{g.label(d)},{w!r}\n")


def serialize(g: WeightedDigraph) -> str:
    buf = io.StringIO()
    write_edge_list(g, buf)
    return buf.getvalue()


def symmetrise(g: WeightedDigraph, dense: bool = True):
    """``W + W^T`` with parallel edges summed, dense ndarray or sparse CSR."""
    a = g.adjacency()
    s = (a + a.T).tocsr()
    return s.toarray() if dense else s


def weight_percentile(g: WeightedDigraph, q: float) -> float:
    """Empirical ``q``-quantile of the edge weights, linear interpolation."""
    if g.m == 0:
        raise GraphError("graph has no edges")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return float(np.quantile(g.weight, q))


def strengths(g: WeightedDigraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node (in-strength, out-strength, total strength)."""
    s_in = np.bincount(g.dst, weights=g.weight, minlength=g.n)
    s_out = np.bincount(g.src, weights=g.weight, minlength=g.n)
    return s_in, s_out, s_in + s_out


def csr_by_weight(n: int, rows: np.ndarray, cols: np.ndarray, w: np.ndarray):
    """CSR layout (indptr, cols, weights) with each row sorted by weight, heaviest first."""
    order = np.lexsort((-w, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols[order].astype(np.int64), w[order].astype(np.float64)


def load_ground_truth(stream: TextIO | str, g: WeightedDigraph) -> GroundTruth:
    """Read ``node,label`` rows; ``#`` lines (structure descriptors) are skipped."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    index = {str(lab): i for i, lab in enumerate(g.node_labels())}
    labels = np.zeros(g.n, dtype=np.int8)
    for lineno, line in enumerate(stream, 1):
        text = line.strip()
        if not text or text.startswith("#") or text.lower().startswith("node,"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise EdgeListParseError(lineno, line, "expected node,label with label 0 or 1")
        if parts[0] not in index:
            raise EdgeListParseError(lineno, line, "unknown node")
        labels[index[parts[0]]] = int(parts[1])
    return GroundTruth(labels)


def write_ground_truth(truth: GroundTruth, g: WeightedDigraph, stream: TextIO) -> None:
    for spec in truth.structures:
        members = " ".join(str(g.label(int(v))) for v in spec.nodes)
        stream.write(f"# {spec.kind} size={len(spec.nodes)} nodes={members}\n")
    stream.write("node,label\n")
    for i in range(g.n):
        stream.write(f"{g.label(i)},{int(truth.labels[i])}\n")


def from_edges(n: int, edges: Iterable[tuple[int, int, float]], **kw) -> WeightedDigraph:
    """Convenience constructor from ``(src, dst, weight)`` triples."""
    edges = list(edges)
    if not edges:
        return WeightedDigraph(n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), **kw)
    s, d, w = zip(*edges)
    return WeightedDigraph(n, np.array(s), np.array(d), np.array(w, dtype=float), **kw)
