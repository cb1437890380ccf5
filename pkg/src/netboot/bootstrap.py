"""Percentile confidence intervals from network subsamples, and the
double-bootstrap choice of the subsampling fraction ``q``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as _rng
from .errors import (
    DegenerateRunWarning,
    EmptySample,
    InvalidFraction,
    InvalidInput,
    SelectionFailed,
)
from .graph import Graph
from .statistics import Statistic, StatisticValue, get_statistic
from .subsampling import (
    SCHEMES,
    PartialGraph,
    SamplingPlan,
    draw_nodes,
    draw_pairs,
    with_retry,
)

# replicates evaluated per work item when running on a thread pool
_CHUNK = 16
WARN_FRACTION = 0.10


def percentile_indices(B: int, alpha: float) -> tuple[int, int]:
    """1-based order-statistic indices ``(l, u)`` of the two-sided percentile interval.

    ``l = max(1, floor(alpha/2 * B))`` and ``u = ceil((1 - alpha/2) * B)``,
    clamped to ``[1, B]``.
    """
    if B < 1:
        raise InvalidInput(f"B must be positive, got {B}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    # round first so that e.g. 0.95 * 1000 = 950.0000000000001 is not pushed to 951
    lo = math.floor(round(alpha / 2 * B, 9))
    hi = math.ceil(round((1 - alpha / 2) * B, 9))
    return max(1, min(lo, B)), max(1, min(hi, B))


def percentile_ci(values: np.ndarray, alpha: float):
    """Sorted-order-statistic interval; works column-wise for ``(B, d)`` input."""
    values = np.asarray(values, dtype=np.float64)
    l, u = percentile_indices(len(values), alpha)
    s = np.sort(values, axis=0)
    return s[l - 1], s[u - 1], l, u


@dataclass
class BootstrapRun:
    replicates: np.ndarray
    defined: np.ndarray
    alpha: float
    lower: float | np.ndarray
    upper: float | np.ndarray
    l: int
    u: int
    scheme: str
    q: float
    seed: int
    key: tuple = ()

    @property
    def B(self) -> int:
        return len(self.replicates)

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def frac_degenerate(self) -> float:
        return float(1.0 - self.defined.mean()) if self.B else 0.0

    @property
    def warning(self) -> bool:
        """More than 10% of replicates were degenerate."""
        return self.frac_degenerate > WARN_FRACTION

    @property
    def degenerate_run(self) -> bool:
        """At least half of the replicates were degenerate."""
        return (~self.defined).sum() >= self.B / 2

    def covers(self, x) -> bool | np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (self.lower <= x) & (x <= self.upper)

    def to_dict(self) -> dict:
        def plain(v):
            return v.tolist() if isinstance(v, np.ndarray) else float(v)

        return {
            "scheme": self.scheme, "q": self.q, "B": self.B, "alpha": self.alpha,
            "seed": self.seed, "l": self.l, "u": self.u,
            "lower": plain(self.lower), "upper": plain(self.upper),
            "width": plain(self.width), "frac_degenerate": self.frac_degenerate,
            "warning": self.warning, "degenerate_run": bool(self.degenerate_run),
            "replicates": self.replicates.tolist(), "defined": self.defined.tolist(),
        }


def _resolve(stat) -> Statistic:
    return get_statistic(stat) if isinstance(stat, str) else stat


def evaluate_replicate(g: Graph, stat: Statistic, plan: SamplingPlan,
                       gen: np.random.Generator) -> StatisticValue:
    """Draw one subsample (retrying empty draws) and evaluate ``stat`` on it."""
    if plan.scheme == "node":
        def draw():
            keep = draw_nodes(g.n, plan.p, gen)
            if not keep.any():
                raise EmptySample("no nodes kept")
            return keep
        return stat.on_induced(g, with_retry(draw))
    if plan.scheme == "row":
        def draw():
            rows = draw_nodes(g.n, plan.p, gen)
            if not rows.any():
                raise EmptySample("no rows kept")
            return PartialGraph(g, "row", rows=rows)
    else:
        def draw():
            mask = draw_pairs(g.n, plan.p, gen)
            if not mask.any():
                raise EmptySample("no pairs kept")
            return PartialGraph(g, "pair", pair_mask=mask)
    return stat.on_partial(with_retry(draw))


def replicate_values(g: Graph, stat: Statistic, plan: SamplingPlan, B: int, seed: int,
                     key: tuple = ()) -> tuple[np.ndarray, np.ndarray]:
    """Statistic values on ``B`` subsamples; replicate ``b`` uses stream ``(seed, BOOT, *key, b)``."""

    def chunk(bs: range):
        return [evaluate_replicate(g, stat, plan, _rng.stream(seed, _rng.BOOT, *key, b))
                for b in bs]

    chunks = [range(s, min(s + _CHUNK, B)) for s in range(0, B, _CHUNK)]
    vals = [v for part in _rng.pmap(chunk, chunks) for v in part]
    values = np.array([np.asarray(v.value, dtype=np.float64) for v in vals])
    defined = np.array([v.defined for v in vals], dtype=bool)
    return values, defined


def bootstrap_ci(g: Graph, stat: Statistic | str, scheme: str, q: float, B: int = 200,
                 alpha: float = 0.10, seed: int = 0, key: tuple = (),
                 warn: bool = True) -> BootstrapRun:
    """Percentile bootstrap interval for ``stat`` from ``B`` subsamples at fraction ``q``.

    Degenerate replicates (``defined=False``) keep their value in the sorted
    list.  If at least half are degenerate the run is returned with
    ``degenerate_run`` set and a :class:`DegenerateRunWarning` is issued.
    """
    stat = _resolve(stat)
    if B < 2:
        raise InvalidInput(f"B must be at least 2, got {B}")
    if scheme not in SCHEMES:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    if not 0.0 < q <= 1.0:
        raise InvalidFraction(f"q must lie in (0, 1], got {q}")
    plan = SamplingPlan(scheme, q)
    values, defined = replicate_values(g, stat, plan, B, seed, key)
    lower, upper, l, u = percentile_ci(values, alpha)
    run = BootstrapRun(values, defined, alpha, lower, upper, l, u, scheme, q, seed, tuple(key))
    if warn and run.degenerate_run:
        warnings.warn(
            f"{(~defined).sum()} of {B} replicates degenerate ({scheme}, q={q})",
            DegenerateRunWarning, stacklevel=2,
        )
    return run


def split_halves(n: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random split into sorted halves of sizes ``ceil(n/2)`` and ``floor(n/2)``."""
    perm = gen.permutation(n)
    h = (n + 1) // 2
    return np.sort(perm[:h]), np.sort(perm[h:])


def _ties_smallest(scores: np.ndarray, candidates: np.ndarray) -> int:
    best = scores.min()
    tied = np.flatnonzero(scores <= best + 1e-12)
    return int(tied[np.argmin(candidates[tied])])


@dataclass
class QSelection:
    candidates: np.ndarray
    coverages: np.ndarray
    chosen: float
    alpha: float
    mean_widths: np.ndarray
    degenerate: np.ndarray
    B: int = 0
    B_inner: int = 0
    seed: int = 0

    @property
    def chosen_index(self) -> int:
        return int(np.flatnonzero(self.candidates == self.chosen)[0])

    def to_dict(self) -> dict:
        return {
            "candidates": self.candidates.tolist(), "coverages": self.coverages.tolist(),
            "chosen": float(self.chosen), "alpha": self.alpha,
            "mean_widths": self.mean_widths.tolist(), "degenerate": self.degenerate.tolist(),
            "B": self.B, "B_inner": self.B_inner, "seed": self.seed,
        }


def choose_q(g: Graph, stat: Statistic | str, scheme: str, candidates: Sequence[float],
             B: int = 200, alpha: float = 0.10, seed: int = 0, B_inner: int | None = None,
             key: tuple = ()) -> QSelection:
    """Pick ``q`` whose split-half coverage is closest to ``1 - alpha``.

    For each ``b`` the nodes are split at random into halves ``V1``, ``V2``.
    The statistic on the subgraph induced by ``V1`` is the target; the
    interval comes from bootstrapping the subgraph induced by ``V2`` at each
    candidate ``q``.  The same ``B`` splits serve every candidate.  Ties go to
    the smallest ``q``.  Vector statistics use the mean per-coordinate
    coverage.
    """
    stat = _resolve(stat)
    cands = np.asarray(candidates, dtype=np.float64)
    if cands.size == 0:
        raise InvalidInput("candidate list is empty")
    if ((cands <= 0) | (cands > 1)).any():
        raise InvalidFraction(f"candidates must lie in (0, 1], got {cands.tolist()}")
    if g.n < 4:
        raise InvalidInput(f"choose_q needs n >= 4, got {g.n}")
    B_inner = B if B_inner is None else B_inner
    J = len(cands)
    cover = np.zeros((J, B))
    width = np.zeros((J, B))
    degen = np.zeros((J, B), dtype=bool)
    for b in range(B):
        v1, v2 = split_halves(g.n, _rng.stream(seed, _rng.SPLIT, *key, b))
        target = stat.restrict(v1).on_graph(g.induced(v1)).value
        half = g.induced(v2)
        stat2 = stat.restrict(v2)
        for j, q in enumerate(cands):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateRunWarning)
                run = bootstrap_ci(half, stat2, scheme, float(q), B_inner, alpha, seed,
                                   key=(_rng.HALF, *key, j, b))
            cover[j, b] = np.mean(run.covers(target))
            width[j, b] = np.mean(run.width)
            degen[j, b] = run.degenerate_run
    coverages = cover.mean(axis=1)
    degenerate = degen.mean(axis=1) > 0.5
    if degenerate.all():
        raise SelectionFailed("every candidate q produced degenerate bootstrap runs")
    score = (coverages - (1 - alpha)) ** 2
    j = _ties_smallest(score, cands)
    return QSelection(cands, coverages, float(cands[j]), alpha, width.mean(axis=1),
                      degenerate, B, B_inner, seed)


@dataclass
class CoverageRow:
    q: float
    mean_width: float
    coverage: float
    frac_degenerate: float
    reps: int = 0
    width_se: float = 0.0
    extra: dict = field(default_factory=dict)


def coverage_experiment(generate: Callable[[np.random.Generator], Graph],
                        stat: Statistic | str, scheme: str, q_grid: Sequence[float],
                        B: int = 200, alpha: float = 0.10, reps: int = 100, seed: int = 0,
                        target: Callable[[Graph], float] | None = None) -> list[CoverageRow]:
    """Monte-Carlo width and coverage of :func:`bootstrap_ci` over a grid of ``q``.

    Rep ``r`` draws its parent graph from stream ``(seed, GRAPH, r)``; the
    target is the statistic on that parent unless ``target`` is given.
    """
    stat = _resolve(stat)
    if reps < 1:
        raise InvalidInput(f"reps must be at least 1, got {reps}")
    qs = list(q_grid)
    width = np.zeros((reps, len(qs)))
    cover = np.zeros((reps, len(qs)))
    degen = np.zeros((reps, len(qs)))
    for r in range(reps):
        parent = generate(_rng.stream(seed, _rng.GRAPH, r))
        truth = target(parent) if target is not None else stat.on_graph(parent).value
        for j, q in enumerate(qs):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateRunWarning)
                run = bootstrap_ci(parent, stat, scheme, q, B, alpha, seed, key=(r, j))
            width[r, j] = np.mean(run.width)
            cover[r, j] = np.mean(run.covers(truth))
            degen[r, j] = run.frac_degenerate
    se = width.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.zeros(len(qs))
    return [
        CoverageRow(float(q), float(width[:, j].mean()), float(cover[:, j].mean()),
                    float(degen[:, j].mean()), reps, float(se[j]),
                    {"median_width": float(np.median(width[:, j])),
                     "frac_zero_width": float(np.mean(width[:, j] == 0))})
        for j, q in enumerate(qs)
    ]
