"""Regression with a network cohesion penalty and its resampling-based uncertainty.

The model is ``Y = alpha + X beta + noise`` with individual node effects
``alpha`` shrunk together along edges.  Fits minimize

    ||Y - alpha - X beta||**2 + lambda1 * alpha' L alpha + lambda2 * ||beta||_1

(squared loss, no ``1/2n`` factor).  Resampling touches only the graph:
``X`` and ``Y`` keep all ``n`` rows and the subsample's Laplacian is embedded
at the original node indices, so nodes outside the subsample have zero rows
and columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import rng as _rng
from .bootstrap import BootstrapRun, percentile_ci, replicate_values
from .errors import InvalidInput, MaxIterationsWarning
from .graph import Graph, build_graph, laplacian
from .generators import SbmParams, generate_sbm
from .statistics import Statistic, StatisticValue
from .subsampling import SCHEMES, PartialGraph, SamplingPlan


@dataclass
class CohesionFit:
    node_effects: np.ndarray
    beta: np.ndarray
    objective: float
    active_set: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    converged: bool = True
    n_sweeps: int = 0
    history: list = field(default_factory=list)
    jitter: float = 0.0


def _check(X, Y, L):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).ravel()
    L = np.asarray(L, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = len(Y)
    if X.shape[0] != n or L.shape != (n, n):
        raise InvalidInput(f"shape mismatch: X {X.shape}, Y {Y.shape}, L {L.shape}")
    for name, arr in (("X", X), ("Y", Y), ("L", L)):
        if not np.isfinite(arr).all():
            raise InvalidInput(f"{name} contains non-finite values")
    return X, Y, L


def objective(X, Y, L, alpha, beta, lambda1, lambda2=0.0) -> float:
    r = Y - alpha - X @ beta
    return float(r @ r + lambda1 * alpha @ (L @ alpha) + lambda2 * np.abs(beta).sum())


def _full_solve(X, Y, L, lambda1, free, delta):
    """Direct solve of the (jittered) normal equations over ``(alpha[free], beta)``."""
    n, p = X.shape
    F = np.flatnonzero(free)
    M = np.hstack([np.eye(n)[:, F], X])
    P = np.zeros((len(F) + p, len(F) + p))
    P[:len(F), :len(F)] = L[np.ix_(F, F)]
    A = M.T @ M + lambda1 * P + delta * np.eye(len(F) + p)
    theta = sla.solve(A, M.T @ Y, assume_a="sym")
    alpha = np.zeros(n)
    alpha[F] = theta[:len(F)]
    return alpha, theta[len(F):]


def fit_cohesion(X, Y, L, lambda1: float, free: np.ndarray | None = None) -> CohesionFit:
    """Minimize ``||Y - alpha - X beta||**2 + lambda1 * alpha' L alpha``.

    ``free`` marks the nodes whose effect is estimated; the others are held
    at zero (default: all free).  The effects are eliminated through
    ``S = I + lambda1 L``, leaving the ``p x p`` system
    ``lambda1 X' L S^{-1} X beta = lambda1 X' L S^{-1} Y`` (plus the rows of
    ``X`` for fixed nodes).  If that system is numerically singular the full
    normal equations get a ridge ``delta = 1e-8 * trace / (n + p)``.
    """
    X, Y, L = _check(X, Y, L)
    if lambda1 < 0:
        raise InvalidInput(f"lambda1 must be non-negative, got {lambda1}")
    n, p = X.shape
    free = np.ones(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    F = np.flatnonzero(free)
    Fc = np.flatnonzero(~free)
    LF = L[np.ix_(F, F)]
    S = lambda1 * LF
    S[np.diag_indices_from(S)] += 1.0
    cS = sla.cho_factor(S)
    XF, YF = X[F], Y[F]
    # I - S^{-1} = lambda1 * L S^{-1}: no cancellation for small lambda1
    SX = sla.cho_solve(cS, np.column_stack([XF, YF]))
    LSX = lambda1 * (LF @ SX)
    G = XF.T @ LSX[:, :p] + X[Fc].T @ X[Fc]
    h = XF.T @ LSX[:, p] + X[Fc].T @ Y[Fc]
    jitter = 0.0
    scale = np.trace(G) if p else 0.0
    try:
        if p == 0:
            beta = np.zeros(0)
        else:
            cG = sla.cho_factor(G)
            if np.min(np.abs(np.diag(cG[0]))) ** 2 <= 1e-12 * max(scale, 1e-300):
                raise np.linalg.LinAlgError("ill-conditioned")
            beta = sla.cho_solve(cG, h)
        alpha = np.zeros(n)
        alpha[F] = sla.cho_solve(cS, YF - XF @ beta)
    except np.linalg.LinAlgError:
        trace = len(F) + lambda1 * np.trace(LF) + (X * X).sum()
        jitter = 1e-8 * trace / (len(F) + p)
        alpha, beta = _full_solve(X, Y, L, lambda1, free, jitter)
    return CohesionFit(alpha, beta, objective(X, Y, L, alpha, beta, lambda1),
                       np.arange(p), jitter=jitter)


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class _ProfiledLasso:
    """Lasso in ``beta`` with ``alpha`` minimized out.

    For fixed ``beta`` the optimal ``alpha`` solves ``(I + lambda1 L) alpha = Y - X beta``,
    leaving the quadratic ``(Y - X beta)' W (Y - X beta)`` with ``W = lambda1 L S^-1``.
    ``freeze_alpha`` uses ``W = I`` (plain lasso).
    """

    def __init__(self, X, Y, L, lambda1: float, freeze_alpha: bool = False):
        self.X, self.Y, self.L, self.lambda1 = X, Y, L, lambda1
        self.freeze_alpha = freeze_alpha
        if freeze_alpha:
            self.cS = None
            WX, WY = X, Y
        else:
            S = lambda1 * L
            S[np.diag_indices_from(S)] += 1.0
            self.cS = sla.cho_factor(S)
            # W = lambda1 L S^-1; L and S^-1 commute
            WX = lambda1 * (L @ sla.cho_solve(self.cS, X))
            WY = lambda1 * (L @ sla.cho_solve(self.cS, Y))
        G = X.T @ WX
        self.G = 0.5 * (G + G.T)
        self.c = 0.5 * (X.T @ WY + WX.T @ Y)
        self.yWy = float(Y @ WY)
        self.scale = 1.0 + max(float(np.abs(Y).max(initial=0.0)),
                               float(np.abs(X.T @ Y).max(initial=0.0)))

    def value(self, beta, lambda2):
        return (self.yWy - 2.0 * self.c @ beta + beta @ self.G @ beta
                + lambda2 * np.abs(beta).sum())

    def alpha(self, beta):
        if self.freeze_alpha:
            return np.zeros_like(self.Y)
        return sla.cho_solve(self.cS, self.Y - self.X @ beta)

    def solve(self, lambda2, beta0=None, max_sweeps=10_000, tol=1e-10, step_tol=1e-9):
        G, c = self.G, self.c
        p = G.shape[0]
        g_diag = np.diag(G).copy()
        beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
        h = c - G @ beta
        obj = self.value(beta, lambda2)
        history = [obj]
        converged = False
        sweep = 0
        for sweep in range(1, max_sweeps + 1):
            # largest gradient change 2 G_jj |d beta_j| bounds the KKT residual
            step = 0.0
            for j in range(p):
                if g_diag[j] <= 0.0:
                    continue
                old = beta[j]
                new = soft_threshold(h[j] + g_diag[j] * old, lambda2 / 2.0) / g_diag[j]
                if new != old:
                    beta[j] = new
                    h -= G[:, j] * (new - old)
                    step = max(step, 2.0 * g_diag[j] * abs(new - old))
            new_obj = self.value(beta, lambda2)
            if new_obj > obj + 1e-12 * (1.0 + abs(obj)):
                raise RuntimeError(f"objective increased at sweep {sweep}: {obj!r} -> {new_obj!r}")
            history.append(new_obj)
            done = (obj - new_obj < tol * (1.0 + abs(new_obj))
                    and step <= step_tol * self.scale)
            obj = new_obj
            if done:
                converged = True
                break
        return beta, converged, sweep, history


def _alternating_lasso(X, Y, L, lambda1, lambda2, beta0, max_sweeps, tol):
    n, p = X.shape
    S = lambda1 * L
    S[np.diag_indices_from(S)] += 1.0
    cS = sla.cho_factor(S)
    G = X.T @ X
    g_diag = np.diag(G).copy()
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    alpha = np.zeros(n)
    obj = objective(X, Y, L, alpha, beta, lambda1, lambda2)
    history = [obj]
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        alpha = sla.cho_solve(cS, Y - X @ beta)
        # h = X'(Y - alpha - X beta), kept current through the sweep
        h = X.T @ (Y - alpha) - G @ beta
        for j in range(p):
            if g_diag[j] == 0.0:
                continue
            old = beta[j]
            new = soft_threshold(h[j] + g_diag[j] * old, lambda2 / 2.0) / g_diag[j]
            if new != old:
                beta[j] = new
                h -= G[:, j] * (new - old)
        new_obj = objective(X, Y, L, alpha, beta, lambda1, lambda2)
        if new_obj > obj + 1e-12 * (1.0 + abs(obj)):
            raise RuntimeError(f"objective increased at sweep {sweep}: {obj!r} -> {new_obj!r}")
        history.append(new_obj)
        done = obj - new_obj < tol * (1.0 + abs(new_obj))
        obj = new_obj
        if done:
            converged = True
            break
    return alpha, beta, obj, converged, sweep, history


def fit_cohesion_lasso(X, Y, L, lambda1: float, lambda2: float,
                       beta0: np.ndarray | None = None, max_sweeps: int = 10_000,
                       tol: float = 1e-10, freeze_alpha: bool = False,
                       method: str = "profiled") -> CohesionFit:
    """Block coordinate descent for the cohesion lasso.

    ``method="profiled"`` (default) minimizes jointly over ``(alpha, beta_j)`` for each
    coordinate by eliminating ``alpha`` exactly. ``method="alternating"`` solves
    ``(I + lambda1 L) alpha = Y - X beta`` once per sweep and then soft-thresholds every
    ``beta_j`` at ``lambda2 / (2 ||x_j||**2)``; it can stall when ``lambda1`` is small.
    Both stop when the objective drops by less than ``tol * (1 + |objective|)``; the
    profiled path also requires every coordinate step to move its gradient by at most
    ``1e-9 * (1 + max(||Y||_inf, ||X'Y||_inf))``.
    ``freeze_alpha`` keeps ``alpha = 0`` (plain lasso).
    """
    X, Y, L = _check(X, Y, L)
    if lambda1 < 0 or lambda2 < 0:
        raise InvalidInput("penalties must be non-negative")
    if method not in ("profiled", "alternating"):
        raise InvalidInput(f"unknown method {method!r}")
    if method == "alternating" and not freeze_alpha:
        alpha, beta, obj, converged, sweep, history = _alternating_lasso(
            X, Y, L, lambda1, lambda2, beta0, max_sweeps, tol)
    else:
        prof = _ProfiledLasso(X, Y, L, lambda1, freeze_alpha)
        beta, converged, sweep, history = prof.solve(lambda2, beta0, max_sweeps, tol)
        alpha = prof.alpha(beta)
        obj = objective(X, Y, L, alpha, beta, lambda1, lambda2)
    if not converged:
        warnings.warn(f"cohesion lasso stopped after {max_sweeps} sweeps",
                      MaxIterationsWarning, stacklevel=2)
    return CohesionFit(alpha, beta, obj, np.flatnonzero(beta != 0), converged, sweep, history)


def kkt_violation(fit: CohesionFit, X, Y, L, lambda1: float, lambda2: float,
                  freeze_alpha: bool = False) -> float:
    """Largest violation of the optimality conditions, relative to ``1 + ||M'Y||_inf``.

    ``M = [I | X]``; the subgradient of the objective must contain 0.
    """
    X, Y, L = _check(X, Y, L)
    scale = 1.0 + max(float(np.abs(Y).max()), float(np.abs(X.T @ Y).max(initial=0.0)))
    r = Y - fit.node_effects - X @ fit.beta
    g_alpha = -2 * r + 2 * lambda1 * (L @ fit.node_effects)
    g_beta = -2 * X.T @ r
    nz = fit.beta != 0
    v_beta = np.where(nz, np.abs(g_beta + lambda2 * np.sign(fit.beta)),
                      np.maximum(np.abs(g_beta) - lambda2, 0.0))
    out = float(v_beta.max()) if len(v_beta) else 0.0
    if not freeze_alpha:
        out = max(out, float(np.abs(g_alpha).max()))
    return out / scale


def naive_bootstrap_graph(g: Graph, draws: np.ndarray) -> Graph:
    """Graph on positions ``0..n-1``: ``i ~ j`` iff ``draws[i] ~ draws[j]`` or ``draws[i] == draws[j]``."""
    d = np.asarray(draws, dtype=np.int64)
    A = g.dense(bool)[np.ix_(d, d)] | (d[:, None] == d[None, :])
    return build_graph(len(d), np.argwhere(np.triu(A, 1)))


def naive_node_bootstrap(g: Graph, rng: np.random.Generator | int) -> Graph:
    """Resample ``n`` nodes with replacement; duplicated draws become adjacent."""
    gen = _rng.as_generator(rng)
    return naive_bootstrap_graph(g, gen.integers(0, g.n, size=g.n))


def embedded_laplacian(parent: Graph, keep: np.ndarray) -> np.ndarray:
    """Laplacian of the subgraph induced by ``keep``, at the parent's node indices."""
    e = parent.edges
    sel = keep[e[:, 0]] & keep[e[:, 1]]
    return laplacian(Graph(parent.n, np.ascontiguousarray(e[sel])))


class CohesionBeta(Statistic):
    """Coefficient vector of the cohesion fit with fixed ``X`` and ``Y``.

    ``dropped="pad"`` (default) embeds the subsample Laplacian with zero rows
    for nodes outside a node subsample, leaving their effects unpenalized;
    ``dropped="exclude"`` removes those effects from the fit (held at zero).
    """

    name = "cohesion_beta"

    def __init__(self, X, Y, lambda1: float = 1.0, dropped: str = "pad"):
        if dropped not in ("pad", "exclude"):
            raise InvalidInput(f"dropped must be 'pad' or 'exclude', got {dropped!r}")
        self.X = np.asarray(X, dtype=np.float64)
        self.Y = np.asarray(Y, dtype=np.float64)
        self.lambda1 = lambda1
        self.dropped = dropped
        self.dim = self.X.shape[1]

    def _fit(self, L, free=None) -> StatisticValue:
        return StatisticValue(fit_cohesion(self.X, self.Y, L, self.lambda1, free).beta)

    def on_graph(self, g: Graph) -> StatisticValue:
        return self._fit(laplacian(g))

    def on_induced(self, parent: Graph, keep: np.ndarray) -> StatisticValue:
        free = keep if self.dropped == "exclude" else None
        return self._fit(embedded_laplacian(parent, keep), free)

    def on_partial(self, pg: PartialGraph) -> StatisticValue:
        return self._fit(laplacian(pg.observed_graph()))

    def restrict(self, nodes) -> CohesionBeta:
        return CohesionBeta(self.X[nodes], self.Y[nodes], self.lambda1, self.dropped)


@dataclass
class BetaUncertainty:
    run: BootstrapRun
    widths: np.ndarray
    max_width: float
    min_width: float
    coverage: float | None
    mse: float | None
    point: np.ndarray

    def to_rows(self, beta_true=None) -> list[dict]:
        rows = []
        for c in range(len(self.widths)):
            row = {"coordinate": c, "estimate": float(self.point[c]),
                   "lower": float(self.run.lower[c]), "upper": float(self.run.upper[c]),
                   "width": float(self.widths[c])}
            if beta_true is not None:
                row["covered"] = int(self.run.lower[c] <= beta_true[c] <= self.run.upper[c])
            rows.append(row)
        return rows


def _naive_values(g, X, Y, lambda1, B, seed, key=()):
    def one(b):
        gen = _rng.stream(seed, _rng.BOOT, *key, b)
        d = gen.integers(0, g.n, size=g.n)
        gb = naive_bootstrap_graph(g, d)
        return fit_cohesion(X[d], Y[d], laplacian(gb), lambda1).beta

    vals = _rng.pmap(one, range(B))
    return np.array(vals), np.ones(B, dtype=bool)


def beta_uncertainty(g: Graph, X, Y, scheme: str, q: float, lambda1: float = 1.0,
                     B: int = 200, alpha: float = 0.10, seed: int = 0,
                     beta_true=None, dropped: str = "pad", key: tuple = ()) -> BetaUncertainty:
    """Per-coordinate percentile intervals for the cohesion coefficients.

    ``scheme`` is ``node``, ``row``, ``pair`` (graph resampled, ``X`` and
    ``Y`` kept) or ``naive`` (nodes drawn with replacement, rows of ``X``
    and ``Y`` follow the draws; ``q`` is ignored).
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if scheme == "naive":
        values, defined = _naive_values(g, X, Y, lambda1, B, seed, key)
    elif scheme in SCHEMES:
        stat = CohesionBeta(X, Y, lambda1, dropped)
        values, defined = replicate_values(g, stat, SamplingPlan(scheme, q), B, seed, key)
    else:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    lower, upper, l, u = percentile_ci(values, alpha)
    run = BootstrapRun(values, defined, alpha, lower, upper, l, u, scheme, q, seed, tuple(key))
    widths = upper - lower
    point = values.mean(axis=0)
    coverage = mse = None
    if beta_true is not None:
        bt = np.asarray(beta_true, dtype=np.float64)
        coverage = float(run.covers(bt).mean())
        mse = float(np.mean((point - bt) ** 2))
    return BetaUncertainty(run, widths, float(widths.max()), float(widths.min()),
                           coverage, mse, point)


@dataclass
class StabilityResult:
    frequencies: np.ndarray
    path_frequencies: np.ndarray
    lambdas: np.ndarray


def default_lambda_path(X, Y, n_lambda: int = 20) -> np.ndarray:
    """Log-spaced ``lambda2`` from ``||X'Y||_inf`` down to 1% of it."""
    top = float(np.abs(np.asarray(X).T @ np.asarray(Y)).max())
    return np.logspace(np.log10(top), np.log10(0.01 * top), n_lambda)


def stability_selection(g: Graph, X, Y, lambda1: float, lambda2=None, scheme: str = "node",
                        q: float = 0.5, B: int = 100, seed: int = 0,
                        n_lambda: int = 20, tol: float = 1e-8) -> StabilityResult:
    """Selection frequency of each predictor over ``B`` subsampled graphs.

    ``lambda2`` may be a scalar, a sequence, or ``None`` for the default
    path; with several values the frequency is maximized over the path.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if lambda2 is None:
        lambdas = default_lambda_path(X, Y, n_lambda)
    else:
        lambdas = np.sort(np.atleast_1d(np.asarray(lambda2, dtype=np.float64)))[::-1]
    plan = SamplingPlan(scheme, q)

    def one(b):
        gen = _rng.stream(seed, _rng.BOOT, b)
        from .bootstrap import evaluate_replicate

        holder = _LaplacianCapture()
        evaluate_replicate(g, holder, plan, gen)
        prof = _ProfiledLasso(X, Y, holder.L, lambda1)
        beta = None
        sel = np.zeros((len(lambdas), X.shape[1]), dtype=bool)
        for i, lam in enumerate(lambdas):
            beta = prof.solve(lam, beta0=beta, tol=tol)[0]
            sel[i] = beta != 0
        return sel

    sels = np.array(_rng.pmap(one, range(B)))
    path = sels.mean(axis=0)
    return StabilityResult(path.max(axis=0), path, lambdas)


class _LaplacianCapture(Statistic):
    """Records the embedded Laplacian of whatever subsample it is evaluated on."""

    def on_graph(self, g):
        self.L = laplacian(g)
        return StatisticValue(0.0)

    def on_induced(self, parent, keep):
        self.L = embedded_laplacian(parent, keep)
        return StatisticValue(0.0)

    def on_partial(self, pg):
        self.L = laplacian(pg.observed_graph())
        return StatisticValue(0.0)


@dataclass(frozen=True)
class CohesionDesign:
    """SBM graph with community-centred node effects and Gaussian covariates.

    ``alpha_i ~ N(center of i's community, sigma_alpha**2)``, ``x_i ~ N(0, I_p)``,
    ``y_i ~ N(alpha_i + beta' x_i, 1)``.  ``beta_j ~ N(1, 1)`` for the first
    ``n_nonzero`` coordinates (all when ``None``) and 0 otherwise.
    """

    sizes: tuple = (200, 200, 200)
    centers: tuple = (-1.0, 0.0, 1.0)
    rho: float = 0.2
    t: float = 10.0
    sigma_alpha: float = 0.1
    p: int = 5
    n_nonzero: int | None = None
    signal: bool = True

    @property
    def params(self) -> SbmParams:
        return SbmParams(self.sizes, self.rho, self.t)

    def draw(self, seed: int):
        """Returns ``(graph, X, Y, alpha, beta)``."""
        g = generate_sbm(self.params, _rng.stream(seed, _rng.GRAPH))
        gen = _rng.stream(seed, _rng.DESIGN)
        n = g.n
        labels = self.params.labels
        k = self.p if self.n_nonzero is None else self.n_nonzero
        beta = np.zeros(self.p)
        beta[:k] = gen.normal(1.0, 1.0, size=k)
        alpha = np.asarray(self.centers)[labels] + gen.normal(0.0, self.sigma_alpha, size=n)
        X = gen.normal(size=(n, self.p))
        if not self.signal:
            alpha = np.zeros(n)
            beta = np.zeros(self.p)
        Y = alpha + X @ beta + gen.normal(size=n)
        return g, X, Y, alpha, beta
