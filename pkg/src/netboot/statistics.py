"""Network statistics on full graphs, induced subgraphs and partial graphs.

Statistics used by the bootstrap engine are objects with three entry points:

* ``on_graph(g)`` -- a complete graph (the parent or an induced subgraph),
* ``on_induced(parent, keep)`` -- the subgraph induced by a boolean node mask,
* ``on_partial(pg)`` -- a row or pair sample.

``restrict(nodes)`` returns the statistic for the subgraph induced by
``nodes``; it only matters for statistics carrying node-level data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InvalidInput, Undefined
from .graph import Graph, n_pairs
from .subsampling import PartialGraph


@dataclass(frozen=True)
class StatisticValue:
    value: float | np.ndarray
    defined: bool = True

    def __float__(self) -> float:
        return float(self.value)


def edge_density(g: Graph) -> float:
    if g.n < 2:
        raise Undefined(f"edge density needs n >= 2, got n = {g.n}")
    return g.m / n_pairs(g.n)


def triangle_count(g: Graph) -> int:
    return len(g.triangles)


def _ratio(n_edges, n_obs_pairs, n_tri, n_obs_triples) -> StatisticValue:
    rho = n_edges / n_obs_pairs
    if rho == 0:
        return StatisticValue(0.0, defined=False)
    return StatisticValue(float(n_tri / n_obs_triples / rho**3))


def normalized_triangle_density(g: Graph) -> StatisticValue:
    """Triangle frequency among all triples divided by ``rho**3``."""
    if g.n < 3:
        raise Undefined(f"triangle density needs n >= 3, got n = {g.n}")
    return _ratio(g.m, n_pairs(g.n), triangle_count(g), comb(g.n, 3))


@lru_cache(maxsize=8)
def _upper_flat(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    return iu * n + ju


def _mask_triangles(pair_mask: np.ndarray, n: int) -> int:
    """Number of triples whose three pairs are all in the mask."""
    M = np.zeros(n * n, dtype=np.float32)
    M[_upper_flat(n)] = pair_mask
    M = M.reshape(n, n)
    M += M.T
    # entries of M @ M are integers below 2**24, exact in float32
    return int(round(((M @ M) * M).sum(dtype=np.float64) / 6))


def _partial_counts(pg: PartialGraph, triples: str = "exact"):
    """(observed edges, observed pairs, observed triangles, fully observed triples)."""
    g = pg.parent
    n = g.n
    tri = g.triangles
    n_edges = int(pg.edge_observed.sum())
    if pg.rows is not None:
        s = pg.rows
        m = int(s.sum())
        # a triple is fully observed iff at least two of its nodes are sampled rows
        hits = s[tri].sum(axis=1) if len(tri) else np.zeros(0)
        n_tri = int((hits >= 2).sum())
        n_triples = comb(m, 3) + comb(m, 2) * (n - m)
    else:
        mask = pg.pair_mask
        if len(tri):
            n_tri = int(mask[g.triangle_pair_index].all(axis=1).sum())
        else:
            n_tri = 0
        if triples == "exact":
            n_triples = _mask_triangles(mask, n)
        elif triples == "expected":
            n_triples = comb(n, 3) * (pg.n_observed_pairs / n_pairs(n)) ** 3
        else:
            raise InvalidInput(f"triples must be 'exact' or 'expected', got {triples!r}")
    return n_edges, pg.n_observed_pairs, n_tri, n_triples


def partial_triangle_density(pg: PartialGraph, fill: str = "mask",
                             triples: str = "exact") -> StatisticValue:
    """Normalized triangle density of a row or pair sample.

    ``fill="mask"`` (default) restricts edge density to observed pairs and
    triangle frequency to fully observed triples.  ``fill="zero"`` treats
    unobserved pairs as absent edges and evaluates the full-graph formula.
    For pair samples ``triples="expected"`` replaces the exact count of fully
    observed triples by ``C(n,3) * qhat**3``, avoiding an ``O(n**3)`` product.
    """
    if fill == "zero":
        return normalized_triangle_density(pg.observed_graph())
    if fill != "mask":
        raise InvalidInput(f"fill must be 'mask' or 'zero', got {fill!r}")
    if pg.n_observed_pairs == 0:
        raise Undefined("no observed pairs")
    n_edges, n_obs, n_tri, n_triples = _partial_counts(pg, triples)
    if n_triples == 0:
        raise Undefined("no fully observed triple")
    return _ratio(n_edges, n_obs, n_tri, n_triples)


class Statistic:
    """Base class; subclasses override ``on_graph`` and optionally the fast paths."""

    name = "statistic"
    dim: int | None = None  # None for scalars

    def on_graph(self, g: Graph) -> StatisticValue:
        raise NotImplementedError

    def on_induced(self, parent: Graph, keep: np.ndarray) -> StatisticValue:
        return self.on_graph(parent.induced(keep))

    def on_partial(self, pg: PartialGraph) -> StatisticValue:
        return self.on_graph(pg.observed_graph())

    def restrict(self, nodes: np.ndarray) -> Statistic:
        return self

    def __call__(self, g: Graph) -> StatisticValue:
        return self.on_graph(g)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


def _safe(fn, *args) -> StatisticValue:
    try:
        return fn(*args)
    except Undefined:
        return StatisticValue(0.0, defined=False)


class TriangleDensity(Statistic):
    """Normalized triangle density.

    On subsamples a replicate with no observed triangle is flagged
    ``defined=False`` (value 0): the sparse-sample failure mode.
    """

    name = "triangle_density"

    def __init__(self, fill: str = "mask", triples: str = "exact"):
        self.fill = fill
        self.triples = triples

    def on_graph(self, g: Graph) -> StatisticValue:
        return normalized_triangle_density(g)

    def on_induced(self, parent: Graph, keep: np.ndarray) -> StatisticValue:
        m = int(keep.sum())
        if m < 3:
            return StatisticValue(0.0, defined=False)
        e = parent.edges
        t = parent.triangles
        n_edges = int((keep[e[:, 0]] & keep[e[:, 1]]).sum())
        n_tri = int(keep[t].all(axis=1).sum()) if len(t) else 0
        out = _ratio(n_edges, n_pairs(m), n_tri, comb(m, 3))
        return out if n_tri else StatisticValue(0.0, defined=False)

    def on_partial(self, pg: PartialGraph) -> StatisticValue:
        if self.fill == "zero":
            g = pg.observed_graph()
            out = _safe(normalized_triangle_density, g)
            return out if g.triangles.size else StatisticValue(0.0, defined=False)
        if pg.n_observed_pairs == 0:
            return StatisticValue(0.0, defined=False)
        n_edges, n_obs, n_tri, n_triples = _partial_counts(pg, self.triples)
        if n_triples == 0 or n_tri == 0:
            return StatisticValue(0.0, defined=False)
        return _ratio(n_edges, n_obs, n_tri, n_triples)

    def __repr__(self) -> str:
        return f"TriangleDensity(fill={self.fill!r}, triples={self.triples!r})"


class EdgeDensity(Statistic):
    name = "edge_density"

    def on_graph(self, g: Graph) -> StatisticValue:
        return _safe(lambda h: StatisticValue(edge_density(h)), g)

    def on_induced(self, parent: Graph, keep: np.ndarray) -> StatisticValue:
        m = int(keep.sum())
        if m < 2:
            return StatisticValue(0.0, defined=False)
        e = parent.edges
        return StatisticValue(int((keep[e[:, 0]] & keep[e[:, 1]]).sum()) / n_pairs(m))

    def on_partial(self, pg: PartialGraph) -> StatisticValue:
        if pg.n_observed_pairs == 0:
            return StatisticValue(0.0, defined=False)
        return StatisticValue(int(pg.edge_observed.sum()) / pg.n_observed_pairs)


class Constant(Statistic):
    """Returns the same value on every input (a test double)."""

    name = "constant"

    def __init__(self, value: float = 0.0):
        self.value = value

    def on_graph(self, g):
        return StatisticValue(self.value)

    def on_induced(self, parent, keep):
        return StatisticValue(self.value)

    def on_partial(self, pg):
        return StatisticValue(self.value)


STATISTIC_NAMES = ("triangle_density", "edge_density", "num_communities_bh",
                   "num_communities_ecv", "cohesion_beta")


def get_statistic(name: str, **kwargs) -> Statistic:
    """Statistic registered under a CLI name; ``kwargs`` go to its constructor."""
    if name == "triangle_density":
        return TriangleDensity(**kwargs)
    if name == "edge_density":
        return EdgeDensity(**kwargs)
    if name == "num_communities_bh":
        from .community import BetheHessianK
        return BetheHessianK(**kwargs)
    if name == "num_communities_ecv":
        from .community import EcvAucK
        return EcvAucK(**kwargs)
    if name == "cohesion_beta":
        from .regression import CohesionBeta
        return CohesionBeta(**kwargs)
    raise InvalidInput(f"unknown statistic {name!r}; expected one of {STATISTIC_NAMES}")
