"""Simple undirected graphs, Laplacians and edge-list I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidNode, ParseError, SelfLoopRejected

# Upper bound on wedges materialized at once while listing triangles.
_WEDGE_CHUNK = 4_000_000


def pair_index(i, j, n: int):
    """Canonical index of the unordered pair ``i < j`` among the C(n,2) pairs."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_from_index(key, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`pair_index`."""
    key = np.asarray(key, dtype=np.int64)
    tail = n_pairs(n) - 1 - key
    r = ((np.sqrt(8.0 * tail + 1) - 1) // 2).astype(np.int64)
    # exact integer correction of the float estimate
    r -= (r * (r + 1) // 2 > tail)
    r += ((r + 1) * (r + 2) // 2 <= tail)
    i = n - 2 - r
    j = key - pair_index(i, i + 1, n) + i + 1
    return i, j


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    ``edges`` is an ``(m, 2)`` int64 array of pairs with ``i < j``, sorted
    lexicographically and free of duplicates.  Instances are immutable;
    derived structures are computed lazily and cached.
    """

    n: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.edges.setflags(write=False)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    __hash__ = None

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        # both directions, sorted by (row, col): sorted neighbor lists per node
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, dst[order]

    def neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._csr
        return indices[indptr[i]:indptr[i + 1]]

    @cached_property
    def edge_pair_index(self) -> np.ndarray:
        return pair_index(self.edges[:, 0], self.edges[:, 1], self.n)

    def has_edge(self, i, j):
        i, j = np.minimum(i, j), np.maximum(i, j)
        key = pair_index(i, j, self.n)
        pos = np.searchsorted(self.edge_pair_index, key)
        pos = np.minimum(pos, max(self.m - 1, 0))
        if self.m == 0:
            return np.zeros(np.shape(key), dtype=bool)
        return (self.edge_pair_index[pos] == key) & (i != j)

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        indptr, indices = self._csr
        data = np.ones(len(indices), dtype=dtype)
        return sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def dense(self, dtype=np.float64) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        A[self.edges[:, 0], self.edges[:, 1]] = 1
        A[self.edges[:, 1], self.edges[:, 0]] = 1
        return A

    @cached_property
    def triangles(self) -> np.ndarray:
        """All triangles as a sorted ``(t, 3)`` array of ``i < j < k``.

        For every edge ``(i, j)`` the forward neighbors ``k > j`` of ``j`` are
        intersected with the neighbors of ``i``.
        """
        indptr, indices = self._csr
        out = []
        # forward adjacency: neighbors greater than the node itself
        rows = np.repeat(np.arange(self.n), np.diff(indptr))
        fwd_start = indptr[:-1] + np.bincount(rows[indices < rows], minlength=self.n)
        fwd_len = indptr[1:] - fwd_start
        if self.m == 0:
            return np.zeros((0, 3), dtype=np.int64)
        per_edge = fwd_len[self.edges[:, 1]]
        bounds = np.concatenate([[0], np.cumsum(per_edge)])
        start = 0
        while start < self.m:
            stop = int(np.searchsorted(bounds, bounds[start] + _WEDGE_CHUNK, side="right")) - 1
            stop = max(stop, start + 1)
            e = self.edges[start:stop]
            counts = per_edge[start:stop]
            i = np.repeat(e[:, 0], counts)
            j = np.repeat(e[:, 1], counts)
            offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            k = indices[np.repeat(fwd_start[e[:, 1]], counts) + offs]
            closed = self.has_edge(i, k)
            out.append(np.stack([i[closed], j[closed], k[closed]], axis=1))
            start = stop
        tri = np.concatenate(out) if out else np.zeros((0, 3), dtype=np.int64)
        tri.setflags(write=False)
        return tri

    @cached_property
    def triangle_pair_index(self) -> np.ndarray:
        """Canonical pair indices of the three sides of each triangle, ``(t, 3)``."""
        t = self.triangles
        return np.stack([pair_index(t[:, 0], t[:, 1], self.n),
                         pair_index(t[:, 1], t[:, 2], self.n),
                         pair_index(t[:, 0], t[:, 2], self.n)], axis=1)

    def induced(self, nodes) -> Graph:
        """Induced subgraph on ``nodes``, relabeled ``0..len(nodes)-1`` in sorted order."""
        nodes = np.asarray(nodes)
        if nodes.dtype == bool:
            keep = nodes
        else:
            keep = np.zeros(self.n, dtype=bool)
            keep[nodes] = True
        new_id = np.cumsum(keep) - 1
        sel = keep[self.edges[:, 0]] & keep[self.edges[:, 1]]
        e = new_id[self.edges[sel]]
        return Graph(int(keep.sum()), np.ascontiguousarray(e, dtype=np.int64))


def _canonical(n: int, pairs: np.ndarray) -> Graph:
    if len(pairs) == 0:
        return Graph(n, np.zeros((0, 2), dtype=np.int64))
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    uniq = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return Graph(n, np.ascontiguousarray(uniq, dtype=np.int64))


def build_graph(n: int, edge_list: Iterable) -> Graph:
    """Graph on ``n`` nodes from a list of pairs; repeats in either orientation are merged."""
    n = int(n)
    pairs = np.asarray(list(edge_list) if not isinstance(edge_list, np.ndarray) else edge_list,
                       dtype=np.int64).reshape(-1, 2)
    if len(pairs):
        bad = (pairs < 0) | (pairs >= n)
        if bad.any():
            r = int(np.argwhere(bad.any(axis=1))[0, 0])
            raise InvalidNode(f"edge {tuple(pairs[r])} has an endpoint outside [0, {n})")
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            r = int(np.argmax(loops))
            raise SelfLoopRejected(f"self-loop at node {pairs[r, 0]}")
    return _canonical(n, pairs)


def from_pair_indices(n: int, keys: np.ndarray) -> Graph:
    """Graph whose edges are the given canonical pair indices."""
    keys = np.asarray(keys, dtype=np.int64)
    if len(keys) == 0:
        return Graph(n, np.zeros((0, 2), dtype=np.int64))
    i, j = pair_from_index(np.sort(keys), n)
    return Graph(n, np.stack([i, j], axis=1))


def read_edge_list(path: str | os.PathLike, one_based: bool = False) -> Graph:
    """Read a whitespace-separated edge list.

    An optional first line ``n <count>`` fixes the node count; otherwise it is
    one more than the largest id.  Blank lines and ``#`` comments are skipped.
    """
    n = None
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if n is None and not pairs and tok[0] == "n":
                if len(tok) != 2:
                    raise ParseError(lineno, "header must be 'n <count>'")
                try:
                    n = int(tok[1])
                except ValueError:
                    raise ParseError(lineno, f"bad node count {tok[1]!r}") from None
                continue
            if len(tok) < 2:
                raise ParseError(lineno, "expected two node ids")
            try:
                a, b = int(tok[0]), int(tok[1])
            except ValueError:
                raise ParseError(lineno, f"non-integer token in {line!r}") from None
            pairs.append((a, b))
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if one_based:
        arr = arr - 1
    if n is None:
        n = int(arr.max()) + 1 if len(arr) else 0
    return build_graph(n, arr)


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"n {g.n}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def laplacian(g: Graph, dense: bool = True):
    """``L = D - A``.  Entries are exact integers; returned as float64."""
    if dense:
        L = -g.dense(np.int64)
        L[np.diag_indices(g.n)] = g.degrees
        return L.astype(np.float64)
    A = g.adjacency()
    return (sp.diags(g.degrees.astype(np.float64)) - A).tocsr()
