"""Immutable simple undirected graphs and the distance primitives built on them.

A :class:`Graph` stores its adjacency in CSR form (``indptr``/``indices``)
with every neighbor list sorted ascending.  Breadth-first layering,
ordered-pair edge counting and degree/diameter statistics live here too,
as does the plain-text edge-list format used by every CLI subcommand::

    # comment lines are ignored
    n m
    u v
    ...
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    EmptySourceSetError,
    GraphLoadError,
    NodeOutOfRangeError,
    SelfLoopError,
)

UNREACHED = -1


def _as_node_array(nodes, n: int | None = None) -> np.ndarray:
    if not isinstance(nodes, np.ndarray):
        nodes = list(nodes)
    arr = np.unique(np.asarray(nodes, dtype=np.int64).ravel())
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        bad = int(arr[0]) if arr[0] < 0 else int(arr[-1])
        raise NodeOutOfRangeError(f"node {bad} not in 0..{n - 1}")
    return arr


class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    Instances are immutable; the CSR arrays are flagged read-only so a graph
    can be shared freely between trials.  Build one with :func:`build_graph`.
    """

    __slots__ = ("n", "indptr", "indices", "degrees", "_adjacency", "_csr")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        degrees = np.diff(indptr)
        degrees.setflags(write=False)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "_adjacency", None)
        object.__setattr__(self, "_csr", None)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes()))

    def __getstate__(self):
        return (self.n, np.array(self.indptr), np.array(self.indices))

    def __setstate__(self, state):
        self.__init__(*state)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    @property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Per-node sorted neighbor tuples (built lazily)."""
        if self._adjacency is None:
            adj = tuple(tuple(self.indices[self.indptr[v]:self.indptr[v + 1]].tolist())
                        for v in range(self.n))
            object.__setattr__(self, "_adjacency", adj)
        return self._adjacency

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def edges(self) -> np.ndarray:
        """Edge array of shape ``(m, 2)`` with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min()) if self.n else 0

    def is_regular(self) -> bool:
        return self.n == 0 or self.max_degree == self.min_degree

    def to_csr(self) -> sparse.csr_matrix:
        if self._csr is None:
            data = np.ones(self.indices.size, dtype=np.float64)
            mat = sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
            object.__setattr__(self, "_csr", mat)
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def gather(self, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated neighbor lists of ``nodes``.

        Returns ``(segment, neighbor)`` where ``segment[i]`` is the position in
        ``nodes`` whose adjacency list contributed ``neighbor[i]``.
        """
        starts = self.indptr[nodes]
        lens = self.indptr[nodes + 1] - starts
        total = int(lens.sum())
        seg = np.repeat(np.arange(nodes.size, dtype=np.int64), lens)
        if total == 0:
            return seg, np.empty(0, dtype=np.int64)
        offsets = np.cumsum(lens) - lens
        pos = np.arange(total, dtype=np.int64) - np.repeat(offsets - starts, lens)
        return seg, self.indices[pos]


def build_graph(n: int, edges: Iterable[Sequence[int]] | np.ndarray) -> Graph:
    """Canonical graph from an edge list; duplicate pairs collapse, loops raise."""
    n = int(n)
    if n < 0:
        raise NodeOutOfRangeError(f"node count {n} is negative")
    arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edges must be pairs")
    if arr.size:
        lo, hi = arr.min(), arr.max()
        if lo < 0 or hi >= n:
            bad = int(lo) if lo < 0 else int(hi)
            raise NodeOutOfRangeError(f"node {bad} not in 0..{n - 1}")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            raise SelfLoopError(f"self-loop at node {int(arr[loops][0, 0])}")
    u = np.minimum(arr[:, 0], arr[:, 1])
    v = np.maximum(arr[:, 0], arr[:, 1])
    key = np.unique(u * max(n, 1) + v)
    u, v = key // max(n, 1), key % max(n, 1)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(n, indptr, dst)


def disjoint_union(graphs: Sequence[Graph]) -> Graph:
    offset = 0
    parts = []
    for g in graphs:
        parts.append(g.edges() + offset)
        offset += g.n
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    return build_graph(offset, edges)


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    min_degree: int
    diameter: float  # math.inf when disconnected
    connected: bool

    def to_dict(self) -> dict:
        return {"max_degree": self.max_degree, "min_degree": self.min_degree,
                "diameter": None if math.isinf(self.diameter) else int(self.diameter),
                "connected": self.connected}


@dataclass(frozen=True)
class LayerDecomposition:
    """BFS layers ``N_0(S), N_1(S), ...`` of a source set.

    ``dist`` holds ``UNREACHED`` (-1) for nodes not reachable from the sources.
    """

    dist: np.ndarray
    layers: tuple[np.ndarray, ...]

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    def distance(self, v: int) -> float:
        d = int(self.dist[v])
        return math.inf if d == UNREACHED else d

    def ball(self, t: int) -> np.ndarray:
        """Nodes within distance ``t`` (the t-neighborhood)."""
        if not self.layers[: t + 1]:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(self.layers[: t + 1]))

    @property
    def reached(self) -> int:
        return int(sum(layer.size for layer in self.layers))


def layers_from(g: Graph, sources: Iterable[int] | np.ndarray) -> LayerDecomposition:
    src = _as_node_array(sources, g.n)
    if src.size == 0:
        raise EmptySourceSetError("source set is empty")
    dist = np.full(g.n, UNREACHED, dtype=np.int64)
    dist[src] = 0
    layers = [src]
    frontier = src
    t = 0
    while True:
        _, nb = g.gather(frontier)
        nb = nb[dist[nb] == UNREACHED]
        if nb.size == 0:
            break
        frontier = np.unique(nb)
        t += 1
        dist[frontier] = t
        layers.append(frontier)
    return LayerDecomposition(dist, tuple(layers))


def eccentricity_of_set(g: Graph, sources) -> int | None:
    """Largest distance from ``sources`` to any node, or ``None`` if some node is unreachable."""
    dec = layers_from(g, sources)
    return dec.depth if dec.reached == g.n else None


def edge_count_between(g: Graph, S, S2) -> int:
    """Number of ordered pairs ``(v, u)`` in ``S x S2`` joined by an edge."""
    a = _as_node_array(S, g.n)
    b = _as_node_array(S2, g.n)
    if a.size == 0 or b.size == 0:
        return 0
    mask = np.zeros(g.n, dtype=bool)
    mask[b] = True
    _, nb = g.gather(a)
    return int(mask[nb].sum())


def graph_stats(g: Graph, chunk: int = 256) -> GraphStats:
    if g.n == 0:
        return GraphStats(0, 0, 0, True)
    connected = layers_from(g, [0]).reached == g.n
    if not connected:
        return GraphStats(g.max_degree, g.min_degree, math.inf, False)
    csr = g.to_csr()
    diameter = 0
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = csgraph.shortest_path(csr, method="D", unweighted=True, directed=False, indices=idx)
        diameter = max(diameter, int(dist.max()))
    return GraphStats(g.max_degree, g.min_degree, diameter, True)


# -- edge-list I/O ---------------------------------------------------------

def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def parse_edge_list(text: str, source: str = "<string>") -> Graph:
    lines = list(_data_lines(text))
    if not lines:
        raise GraphLoadError(f"{source}: missing 'n m' header")
    try:
        head = lines[0][1].split()
        if len(head) != 2:
            raise ValueError
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GraphLoadError(f"{source}:{lines[0][0]}: expected 'n m' header") from None
    if n < 0 or m < 0:
        raise GraphLoadError(f"{source}: negative counts in header")
    body = lines[1:]
    if len(body) != m:
        raise GraphLoadError(f"{source}: header declares {m} edges, found {len(body)}")
    edges = np.empty((m, 2), dtype=np.int64)
    for i, (lineno, line) in enumerate(body):
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            edges[i] = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphLoadError(f"{source}:{lineno}: expected 'u v'") from None
    try:
        return build_graph(n, edges)
    except (SelfLoopError, NodeOutOfRangeError) as exc:
        raise GraphLoadError(f"{source}: {exc}") from exc


def read_edge_list(path: str | os.PathLike) -> Graph:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise GraphLoadError(f"cannot read {path}: {exc}") from exc
    return parse_edge_list(text, str(path))


def format_edge_list(g: Graph, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        for line in c.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"{g.n} {g.m}\n")
    for u, v in g.edges().tolist():
        buf.write(f"{u} {v}\n")
    return buf.getvalue()


def write_edge_list(g: Graph, path: str | os.PathLike, comments: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g, comments))
