"""Erdos-Renyi and stochastic block model generators.

The SBM uses a ``(rho, t)`` parametrization: within-block probability
``rho * gamma1``, between-block ``rho * gamma2``, ``gamma1 = t * gamma2``,
with ``gamma2`` solved from exact pair counts so the expected edge density
over all node pairs equals ``rho``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import rng as _rng
from .errors import InfeasibleDensity, InvalidInput
from .graph import Graph, n_pairs

# rows of the upper triangle drawn per chunk
_ROW_CHUNK_PAIRS = 2_000_000


@dataclass(frozen=True)
class SbmParams:
    sizes: tuple[int, ...]
    rho: float
    t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes or min(self.sizes) < 1:
            raise InvalidInput("community sizes must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInput(f"rho must lie in [0, 1], got {self.rho}")
        if self.t < 1.0:
            raise InvalidInput(f"t must be >= 1, got {self.t}")

    @classmethod
    def equal(cls, n: int, K: int, rho: float, t: float = 1.0) -> SbmParams:
        """``K`` blocks of near-equal size (the first ``n % K`` get one extra node)."""
        base, extra = divmod(n, K)
        return cls(tuple(base + (k < extra) for k in range(K)), rho, t)

    @property
    def K(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def within_pairs(self) -> int:
        return sum(comb(s, 2) for s in self.sizes)

    @property
    def gammas(self) -> tuple[float, float]:
        N = n_pairs(self.n)
        W = self.within_pairs
        if N == 0:
            return 1.0, 1.0
        gamma2 = N / (self.t * W + (N - W))
        return self.t * gamma2, gamma2

    @property
    def block_matrix(self) -> np.ndarray:
        g1, g2 = self.gammas
        B = np.full((self.K, self.K), self.rho * g2)
        np.fill_diagonal(B, self.rho * g1)
        return B

    @property
    def labels(self) -> np.ndarray:
        """Fixed blockwise labels: the first ``sizes[0]`` nodes are community 0, etc."""
        return np.repeat(np.arange(self.K), self.sizes)


def _bernoulli_pairs(n: int, prob_row, gen: np.random.Generator) -> Graph:
    """One uniform per pair, in canonical ``i < j`` order."""
    rows_i = []
    rows_j = []
    i = 0
    while i < n - 1:
        # gather a block of consecutive rows
        i0, count = i, 0
        while i < n - 1 and (count == 0 or count + (n - 1 - i) <= _ROW_CHUNK_PAIRS):
            count += n - 1 - i
            i += 1
        ii = np.repeat(np.arange(i0, i), n - 1 - np.arange(i0, i))
        starts = np.cumsum(np.concatenate([[0], n - 1 - np.arange(i0, i)]))[:-1]
        jj = np.arange(count) - np.repeat(starts, n - 1 - np.arange(i0, i)) + ii + 1
        hit = gen.random(count) < prob_row(ii, jj)
        rows_i.append(ii[hit])
        rows_j.append(jj[hit])
    if not rows_i:
        return Graph(n, np.zeros((0, 2), dtype=np.int64))
    e = np.stack([np.concatenate(rows_i), np.concatenate(rows_j)], axis=1).astype(np.int64)
    return Graph(n, e)


def generate_sbm(params: SbmParams, seed: int | np.random.Generator) -> Graph:
    """Draw an SBM graph; each pair ``i < j`` is an independent Bernoulli."""
    B = params.block_matrix
    if B.max() > 1.0:
        raise InfeasibleDensity(
            f"within-block probability rho*gamma1 = {B.max():.4g} exceeds 1"
        )
    gen = seed if isinstance(seed, np.random.Generator) else _rng.stream(seed, _rng.GRAPH)
    c = params.labels
    return _bernoulli_pairs(params.n, lambda i, j: B[c[i], c[j]], gen)


def generate_er(n: int, rho: float, seed: int | np.random.Generator) -> Graph:
    """Erdos-Renyi graph; identical to ``generate_sbm`` with one block and the same seed."""
    if not 0.0 <= rho <= 1.0:
        raise InvalidInput(f"rho must lie in [0, 1], got {rho}")
    gen = seed if isinstance(seed, np.random.Generator) else _rng.stream(seed, _rng.GRAPH)
    return _bernoulli_pairs(n, lambda i, j: rho, gen)


def sbm_from_config(cfg: dict) -> SbmParams:
    """Build params from a config mapping with ``n``, ``K`` (or ``sizes``), ``rho``, ``t``."""
    rho = float(cfg["rho"])
    t = float(cfg.get("t", 1.0))
    if "sizes" in cfg:
        return SbmParams(tuple(cfg["sizes"]), rho, t)
    return SbmParams.equal(int(cfg["n"]), int(cfg.get("K", 1)), rho, t)

