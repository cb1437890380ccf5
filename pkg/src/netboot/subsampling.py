"""Node, row and node-pair subsampling, all indexed by the node-pair fraction ``q``.

=======  ==================  =====================
scheme   unit kept w.p. p    expected pair fraction
=======  ==================  =====================
node     node                q = p**2
row      adjacency row       q = 1 - (1 - p)**2
pair     unordered pair      q = p
=======  ==================  =====================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import sqrt
from typing import Callable, TypeVar

import numpy as np

from .errors import EmptySample, InvalidFraction, InvalidInput, InvalidRank
from .graph import Graph, n_pairs, pair_index

SCHEMES = ("node", "row", "pair")
MAX_RETRIES = 100

T = TypeVar("T")


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise InvalidInput(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def q_to_p(scheme: str, q: float) -> float:
    _check_scheme(scheme)
    if not 0.0 < q <= 1.0:
        raise InvalidFraction(f"q must lie in (0, 1], got {q}")
    if scheme == "node":
        return sqrt(q)
    if scheme == "row":
        return 1.0 - sqrt(1.0 - q)
    return float(q)


def p_to_q(scheme: str, p: float) -> float:
    _check_scheme(scheme)
    if scheme == "node":
        return p * p
    if scheme == "row":
        return 1.0 - (1.0 - p) ** 2
    return float(p)


@dataclass(frozen=True)
class SamplingPlan:
    scheme: str
    q: float
    p: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", q_to_p(self.scheme, self.q))


@dataclass(frozen=True, eq=False)
class PartialGraph:
    """A parent graph seen through a mask of observed node pairs.

    Row samples store the sampled row set ``rows``; the mask is every pair
    with at least one endpoint in it.  Pair samples store ``pair_mask``, a
    boolean array over canonical pair indices.  Unobserved pairs are unknown;
    observed zeros are true absences.
    """

    parent: Graph
    scheme: str
    rows: np.ndarray | None = None
    pair_mask: np.ndarray | None = None

    @property
    def parent_n(self) -> int:
        return self.parent.n

    @cached_property
    def n_observed_pairs(self) -> int:
        n = self.parent.n
        if self.rows is not None:
            m = int(self.rows.sum())
            return n_pairs(n) - n_pairs(n - m)
        return int(self.pair_mask.sum())

    @cached_property
    def edge_observed(self) -> np.ndarray:
        """Boolean over ``parent.edges``: is the edge's pair in the mask."""
        e = self.parent.edges
        if self.rows is not None:
            return self.rows[e[:, 0]] | self.rows[e[:, 1]]
        return self.pair_mask[self.parent.edge_pair_index]

    @property
    def observed_edges(self) -> np.ndarray:
        return self.parent.edges[self.edge_observed]

    def observed(self, i, j):
        """Whether the pair ``(i, j)`` is in the mask (never true for ``i == j``)."""
        i = np.asarray(i)
        j = np.asarray(j)
        if self.rows is not None:
            hit = self.rows[i] | self.rows[j]
        else:
            lo, hi = np.minimum(i, j), np.maximum(i, j)
            safe_hi = np.where(lo == hi, np.minimum(hi + 1, self.parent.n - 1), hi)
            hit = self.pair_mask[pair_index(lo, safe_hi, self.parent.n)]
        return hit & (i != j)

    def mask_matrix(self) -> np.ndarray:
        n = self.parent.n
        if self.rows is not None:
            M = self.rows[:, None] | self.rows[None, :]
        else:
            M = np.zeros((n, n), dtype=bool)
            iu = np.triu_indices(n, 1)
            M[iu] = self.pair_mask
            M |= M.T
        np.fill_diagonal(M, False)
        return M

    def observed_graph(self) -> Graph:
        """Zero-filled graph: observed edges on all ``parent_n`` nodes."""
        return Graph(self.parent.n, np.ascontiguousarray(self.observed_edges))


def draw_nodes(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n, dtype=np.float32) < p


def draw_pairs(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n_pairs(n), dtype=np.float32) < p


def node_sample(g: Graph, plan: SamplingPlan, rng: np.random.Generator) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on Bernoulli(p) nodes, plus the kept original ids (sorted)."""
    if plan.scheme != "node":
        raise InvalidInput(f"node_sample needs a node plan, got {plan.scheme!r}")
    keep = draw_nodes(g.n, plan.p, rng)
    if not keep.any():
        raise EmptySample("no nodes kept")
    return g.induced(keep), np.flatnonzero(keep)


def row_sample(g: Graph, plan: SamplingPlan, rng: np.random.Generator) -> PartialGraph:
    if plan.scheme != "row":
        raise InvalidInput(f"row_sample needs a row plan, got {plan.scheme!r}")
    rows = draw_nodes(g.n, plan.p, rng)
    if not rows.any():
        raise EmptySample("no rows kept")
    return PartialGraph(g, "row", rows=rows)


def pair_sample(g: Graph, plan: SamplingPlan, rng: np.random.Generator) -> PartialGraph:
    if plan.scheme != "pair":
        raise InvalidInput(f"pair_sample needs a pair plan, got {plan.scheme!r}")
    mask = draw_pairs(g.n, plan.p, rng)
    if not mask.any():
        raise EmptySample("no pairs kept")
    return PartialGraph(g, "pair", pair_mask=mask)


def subsample(g: Graph, plan: SamplingPlan, rng: np.random.Generator):
    """Dispatch on ``plan.scheme``; node plans return ``(graph, kept)``."""
    if plan.scheme == "node":
        return node_sample(g, plan, rng)
    if plan.scheme == "row":
        return row_sample(g, plan, rng)
    return pair_sample(g, plan, rng)


def with_retry(draw: Callable[[], T], max_tries: int = MAX_RETRIES) -> T:
    """Call ``draw`` until it does not raise :class:`EmptySample`."""
    for _ in range(max_tries - 1):
        try:
            return draw()
        except EmptySample:
            continue
    return draw()


def spectral_completion(values: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the rescaled observed matrix, ordered by decreasing ``|eigenvalue|``.

    ``values`` and ``mask`` are symmetric ``n x n`` arrays.  Observed entries
    are divided by the observed off-diagonal fraction, the rest set to zero.
    """
    n = values.shape[0]
    off = ~np.eye(n, dtype=bool)
    frac = mask[off].mean() if n > 1 else 1.0
    M = np.where(mask & off, values, 0.0)
    if frac > 0:
        M = M / frac
    w, V = np.linalg.eigh(M)
    order = np.argsort(-np.abs(w), kind="stable")
    return w[order], V[:, order]


def low_rank_complete(values: np.ndarray, mask: np.ndarray, k: int) -> np.ndarray:
    n = values.shape[0]
    if not 1 <= k <= n:
        raise InvalidRank(f"rank {k} outside [1, {n}]")
    w, V = spectral_completion(values, mask)
    return (V[:, :k] * w[:k]) @ V[:, :k].T


def complete_low_rank(pg: PartialGraph, k: int) -> np.ndarray:
    """Rank-``k`` score matrix from a partial graph (real-valued, not thresholded)."""
    return low_rank_complete(pg.observed_graph().dense(), pg.mask_matrix(), k)
