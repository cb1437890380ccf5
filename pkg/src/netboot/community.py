"""Estimators of the number of communities.

* Bethe-Hessian count: the number of negative eigenvalues of
  ``H(r) = (r**2 - 1) I - r A + D`` with ``r = sqrt(mean degree)``.
* Edge cross-validation: rank-``k`` spectral completion of a pair sample,
  scored by AUC on the held-out pairs; the best ``k`` wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.stats import rankdata

from . import rng as _rng
from .errors import InvalidInput, NoEdges, UndefinedAUC
from .graph import Graph, n_pairs, pair_from_index
from .statistics import Statistic, StatisticValue
from .subsampling import PartialGraph, draw_pairs, spectral_completion

DENSE_LIMIT = 2000


@dataclass
class KEstimate:
    k_hat: int
    method: str
    diagnostics: dict = field(default_factory=dict)


def bethe_hessian(g: Graph, r: float | None = None):
    """Sparse ``H(r)`` and the ``r`` used."""
    if r is None:
        r = float(np.sqrt(2.0 * g.m / g.n)) if g.n else 0.0
    A = g.adjacency()
    H = sp.diags((r * r - 1.0) + g.degrees.astype(np.float64)) - r * A
    return H.tocsr(), r


def bethe_hessian_k(g: Graph, r: float | None = None, k_max: int = 10) -> KEstimate:
    """Count eigenvalues of ``H(r)`` below ``-1e-8 * ||H||_inf``.

    Dense eigensolve up to ``DENSE_LIMIT`` nodes; above that only the
    ``2 * k_max`` smallest eigenvalues are computed.
    """
    if g.m == 0:
        raise NoEdges("Bethe-Hessian estimate needs at least one edge")
    H, r = bethe_hessian(g, r)
    norm_inf = float(np.abs(H).sum(axis=1).max())
    eps = 1e-8 * norm_inf
    if g.n <= DENSE_LIMIT:
        ev = np.linalg.eigvalsh(H.toarray())
    else:
        k = min(2 * k_max, g.n - 2)
        ev = np.sort(eigsh(H, k=k, which="SA", return_eigenvectors=False))
    k_hat = int((ev < -eps).sum())
    return KEstimate(max(k_hat, 1), "bethe_hessian",
                     {"r": r, "eigenvalues": ev, "negative": k_hat})


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score+ > score-) + P(tie) / 2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUC("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def ecv_auc_k(pg: PartialGraph, k_max: int = 6, parent: Graph | None = None) -> KEstimate:
    """Choose the completion rank maximizing held-out AUC (smallest rank on ties)."""
    parent = pg.parent if parent is None else parent
    if pg.pair_mask is None:
        raise InvalidInput("edge cross-validation needs a pair sample")
    if k_max < 1:
        raise InvalidInput(f"k_max must be positive, got {k_max}")
    n = parent.n
    held = np.flatnonzero(~pg.pair_mask)
    if held.size == 0:
        raise InvalidInput("mask covers every pair; nothing is held out")
    k_max = min(k_max, n)
    w, V = spectral_completion(pg.observed_graph().dense(), pg.mask_matrix())
    I, J = pair_from_index(held, n)
    labels = parent.has_edge(I, J)
    if labels.all() or not labels.any():
        raise UndefinedAUC("held-out pairs contain a single class")
    scores = np.zeros(len(held))
    aucs = []
    for k in range(k_max):
        scores += w[k] * V[I, k] * V[J, k]
        aucs.append(auc(scores, labels))
    aucs = np.array(aucs)
    k_hat = int(np.flatnonzero(aucs >= aucs.max() - 1e-12)[0]) + 1
    return KEstimate(k_hat, "ecv_auc", {"auc": aucs})


class BetheHessianK(Statistic):
    """Bethe-Hessian count; partial samples are zero-filled first."""

    name = "num_communities_bh"

    def __init__(self, k_max: int = 10):
        self.k_max = k_max

    def on_graph(self, g: Graph) -> StatisticValue:
        if g.m == 0:
            return StatisticValue(1.0, defined=False)
        return StatisticValue(float(bethe_hessian_k(g, k_max=self.k_max).k_hat))


class EcvAucK(Statistic):
    """Edge cross-validation count for pair samples.

    A complete graph (e.g. the split half in the choice of ``q``) is scored by
    holding out a fixed random fraction ``holdout`` of its pairs.
    """

    name = "num_communities_ecv"

    def __init__(self, k_max: int = 6, holdout: float = 0.1, seed: int = 0):
        self.k_max = k_max
        self.holdout = holdout
        self.seed = seed

    def on_partial(self, pg: PartialGraph) -> StatisticValue:
        if pg.pair_mask is None:
            raise InvalidInput("num_communities_ecv is only defined for pair samples")
        if pg.pair_mask.all():
            return StatisticValue(1.0, defined=False)
        try:
            return StatisticValue(float(ecv_auc_k(pg, self.k_max).k_hat))
        except UndefinedAUC:
            return StatisticValue(1.0, defined=False)

    def on_graph(self, g: Graph) -> StatisticValue:
        if n_pairs(g.n) < 2:
            return StatisticValue(1.0, defined=False)
        mask = draw_pairs(g.n, 1.0 - self.holdout, _rng.stream(self.seed, _rng.DESIGN))
        return self.on_partial(PartialGraph(g, "pair", pair_mask=mask))

    def on_induced(self, parent: Graph, keep: np.ndarray) -> StatisticValue:
        return self.on_graph(parent.induced(keep))
