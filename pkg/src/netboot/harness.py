"""Experiment driver: configuration, Monte-Carlo grids and the real-data pipeline.

Every task writes one CSV per table and a ``manifest.json`` recording the
configuration, library versions and wall time.  CSV columns are frozen:

* ``triangle.csv``: scheme, q, mean_width, coverage, frac_degenerate
* ``communities.csv``: scheme, q, exact_match, interval_coverage, median_k,
  mean_width, frac_degenerate
* ``communities_dist.csv``: scheme, q, k_hat, proportion
* ``regression.csv``: scheme, q, max_width, min_width, mean_width, coverage, mse
* ``regression_choice.csv``: rep, scheme, chosen_q
* ``stabsel.csv``: scheme, rep, auc
* ``realdata.csv``: name, n, edge_density, T, scheme, chosen_q, lower, upper,
  resid_n, resid_log_density
"""

from __future__ import annotations

import csv
import json
import platform
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from . import rng as _rng
from .bootstrap import bootstrap_ci, choose_q, coverage_experiment
from .community import BetheHessianK, EcvAucK, auc
from .errors import ConfigError, DegenerateDesign, DegenerateRunWarning, UndefinedAUC
from .generators import SbmParams, generate_er, generate_sbm
from .graph import Graph, read_edge_list
from .regression import CohesionBeta, CohesionDesign, beta_uncertainty, stability_selection
from .statistics import TriangleDensity, edge_density, normalized_triangle_density

TASKS = ("triangle", "communities", "regression", "stabsel", "realdata")
DEFAULT_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


@dataclass
class ExperimentConfig:
    """Validated experiment description; build with :meth:`from_dict`.

    ``generator`` holds ``model`` (``er`` or ``sbm``) with ``n``, ``rho`` and
    for SBMs ``K`` and ``t`` (or explicit ``sizes``).  ``options`` carries
    task-specific settings such as ``lambda1`` or ``triples``.
    """

    task: str
    generator: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    schemes: list = field(default_factory=lambda: ["node", "row", "pair"])
    q_grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    B: int = 200
    B_inner: int | None = None
    alpha: float = 0.10
    reps: int = 100
    seed: int = 0
    output_dir: str = "results"
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        for k in d:
            if k not in known:
                raise ConfigError(k, "unknown field")
        if "task" not in d:
            raise ConfigError("task", "missing")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("<root>", "expected a JSON object")
        return cls.from_dict(d)

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError("task", f"expected one of {TASKS}, got {self.task!r}")
        grid = np.asarray(self.q_grid, dtype=np.float64)
        if grid.size == 0:
            raise ConfigError("q_grid", "empty")
        for i, q in enumerate(grid):
            if not 0.0 < q <= 1.0:
                raise ConfigError(f"q_grid[{i}]", f"must lie in (0, 1], got {q}")
        if (np.diff(grid) <= 0).any():
            raise ConfigError("q_grid", "must be strictly increasing")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha", f"must lie in (0, 1), got {self.alpha}")
        for name in ("B", "reps"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < (2 if name == "B" else 1):
                raise ConfigError(name, f"invalid value {v!r}")
        if self.B_inner is not None and (not isinstance(self.B_inner, int) or self.B_inner < 2):
            raise ConfigError("B_inner", f"invalid value {self.B_inner!r}")
        allowed = {"node", "row", "pair", "naive"} if self.task == "regression" else {"node", "row", "pair"}
        for i, s in enumerate(self.schemes):
            if s not in allowed:
                raise ConfigError(f"schemes[{i}]", f"unknown scheme {s!r}")
        if self.task == "realdata":
            if not self.inputs:
                raise ConfigError("inputs", "realdata needs at least one edge list")
        else:
            model = self.generator.get("model", "sbm" if self.task != "triangle" else "er")
            if model not in ("er", "sbm"):
                raise ConfigError("generator.model", f"expected 'er' or 'sbm', got {model!r}")
            if self.task in ("triangle", "communities"):
                for k in ("n", "rho"):
                    if k not in self.generator and not (k == "n" and "sizes" in self.generator):
                        raise ConfigError(f"generator.{k}", "missing")
                rho = self.generator.get("rho")
                if rho is not None and not 0.0 < rho <= 1.0:
                    raise ConfigError("generator.rho", f"must lie in (0, 1], got {rho}")


def make_generator(cfg: dict):
    """Callable ``gen -> Graph`` for an ``er`` or ``sbm`` generator cfg."""
    model = cfg.get("model", "er")
    if model == "er":
        n, rho = int(cfg["n"]), float(cfg["rho"])
        return lambda gen: generate_er(n, rho, gen)
    if "sizes" in cfg:
        params = SbmParams(tuple(cfg["sizes"]), float(cfg["rho"]), float(cfg.get("t", 1.0)))
    else:
        params = SbmParams.equal(int(cfg["n"]), int(cfg.get("K", 1)),
                                 float(cfg["rho"]), float(cfg.get("t", 1.0)))
    return lambda gen: generate_sbm(params, gen)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _triangle_stat(scheme: str, options: dict) -> TriangleDensity:
    triples = options.get("triples", "exact") if scheme == "pair" else "exact"
    return TriangleDensity(fill=options.get("fill", "mask"), triples=triples)


def run_triangle(cfg: ExperimentConfig) -> dict[str, tuple[list, list]]:
    generate = make_generator(cfg.generator)
    rows = []
    for s_idx, scheme in enumerate(cfg.schemes):
        table = coverage_experiment(generate, _triangle_stat(scheme, cfg.options), scheme,
                                    cfg.q_grid, cfg.B, cfg.alpha, cfg.reps,
                                    _rng.child_seed(cfg.seed, s_idx))
        rows += [dict(scheme=scheme, **{k: getattr(r, k) for k in
                                        ("q", "mean_width", "coverage", "frac_degenerate")})
                 for r in table]
    cols = ["scheme", "q", "mean_width", "coverage", "frac_degenerate"]
    return {"triangle": (cols, rows)}


def _k_stat(scheme: str, options: dict):
    if scheme == "pair":
        return EcvAucK(k_max=int(options.get("k_max_ecv", 6)))
    return BetheHessianK(k_max=int(options.get("k_max", 10)))


def run_communities(cfg: ExperimentConfig) -> dict[str, tuple[list, list]]:
    generate = make_generator(cfg.generator)
    K = int(cfg.generator.get("K", len(cfg.generator.get("sizes", [1]))))
    summary, dist = [], []
    for s_idx, scheme in enumerate(cfg.schemes):
        stat = _k_stat(scheme, cfg.options)
        seed = _rng.child_seed(cfg.seed, s_idx)
        pooled = [[] for _ in cfg.q_grid]
        cover = np.zeros((cfg.reps, len(cfg.q_grid)))
        width = np.zeros_like(cover)
        degen = np.zeros_like(cover)
        for r in range(cfg.reps):
            parent = generate(_rng.stream(seed, _rng.GRAPH, r))
            for j, q in enumerate(cfg.q_grid):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DegenerateRunWarning)
                    run = bootstrap_ci(parent, stat, scheme, q, cfg.B, cfg.alpha, seed, key=(r, j))
                pooled[j].append(run.replicates.astype(np.int64))
                cover[r, j] = run.covers(K)
                width[r, j] = run.width
                degen[r, j] = run.frac_degenerate
        for j, q in enumerate(cfg.q_grid):
            ks = np.concatenate(pooled[j])
            summary.append(dict(scheme=scheme, q=q, exact_match=float(np.mean(ks == K)),
                                interval_coverage=float(cover[:, j].mean()),
                                median_k=float(np.median(ks)),
                                mean_width=float(width[:, j].mean()),
                                frac_degenerate=float(degen[:, j].mean())))
            vals, counts = np.unique(ks, return_counts=True)
            dist += [dict(scheme=scheme, q=q, k_hat=int(v), proportion=c / len(ks))
                     for v, c in zip(vals, counts)]
    return {
        "communities": (["scheme", "q", "exact_match", "interval_coverage", "median_k",
                         "mean_width", "frac_degenerate"], summary),
        "communities_dist": (["scheme", "q", "k_hat", "proportion"], dist),
    }


def design_from(cfg: ExperimentConfig, **overrides) -> CohesionDesign:
    g = cfg.generator
    o = cfg.options
    kwargs = dict(
        sizes=tuple(g.get("sizes", (200, 200, 200))), centers=tuple(o.get("centers", (-1.0, 0.0, 1.0))),
        rho=float(g.get("rho", 0.2)), t=float(g.get("t", 10.0)),
        sigma_alpha=float(o.get("sigma_alpha", 0.1)), p=int(o.get("p", 5)),
        n_nonzero=o.get("n_nonzero"), signal=bool(o.get("signal", True)),
    )
    kwargs.update(overrides)
    return CohesionDesign(**kwargs)


def run_regression(cfg: ExperimentConfig) -> dict[str, tuple[list, list]]:
    design = design_from(cfg)
    lambda1 = float(cfg.options.get("lambda1", 1.0))
    dropped = cfg.options.get("dropped", "pad")
    do_choose = bool(cfg.options.get("choose_q", False))
    acc: dict[tuple, list] = {}
    choice = []
    for r in range(cfg.reps):
        g, X, Y, _, beta = design.draw(_rng.child_seed(cfg.seed, r))
        for s_idx, scheme in enumerate(cfg.schemes):
            qs = [None] if scheme == "naive" else cfg.q_grid
            for j, q in enumerate(qs):
                res = beta_uncertainty(g, X, Y, scheme, 1.0 if q is None else q, lambda1, cfg.B,
                                       cfg.alpha, cfg.seed, beta_true=beta, dropped=dropped,
                                       key=(r, s_idx, j))
                acc.setdefault((scheme, q), []).append(
                    (res.max_width, res.min_width, float(res.widths.mean()), res.coverage, res.mse))
            if do_choose and scheme != "naive":
                sel = choose_q(g, CohesionBeta(X, Y, lambda1, dropped), scheme, cfg.q_grid,
                               B=int(cfg.options.get("B_outer", cfg.B)), alpha=cfg.alpha,
                               seed=cfg.seed, B_inner=cfg.B_inner, key=(r, s_idx))
                choice.append(dict(rep=r, scheme=scheme, chosen_q=sel.chosen))
    rows = []
    for (scheme, q), vals in acc.items():
        m = np.mean(np.array(vals), axis=0)
        rows.append(dict(scheme=scheme, q="" if q is None else q, max_width=m[0], min_width=m[1],
                         mean_width=m[2], coverage=m[3], mse=m[4]))
    out = {"regression": (["scheme", "q", "max_width", "min_width", "mean_width", "coverage",
                           "mse"], rows)}
    if do_choose:
        out["regression_choice"] = (["rep", "scheme", "chosen_q"], choice)
    return out


def run_stabsel(cfg: ExperimentConfig) -> dict[str, tuple[list, list]]:
    design = design_from(cfg, p=int(cfg.options.get("p", 100)),
                         n_nonzero=cfg.options.get("n_nonzero", 25))
    lambda1 = float(cfg.options.get("lambda1", 1.0))
    q = float(cfg.options.get("q", cfg.q_grid[0]))
    rows = []
    for r in range(cfg.reps):
        g, X, Y, _, beta = design.draw(_rng.child_seed(cfg.seed, r))
        k = design.p if design.n_nonzero is None else design.n_nonzero
        support = np.zeros(design.p, dtype=bool)
        support[:k] = True
        for scheme in cfg.schemes:
            res = stability_selection(g, X, Y, lambda1, cfg.options.get("lambda2"), scheme, q,
                                      cfg.B, _rng.child_seed(cfg.seed, r),
                                      n_lambda=int(cfg.options.get("n_lambda", 20)))
            try:
                a = auc(res.frequencies, support)
            except UndefinedAUC:
                a = float("nan")
            rows.append(dict(scheme=scheme, rep=r, auc=a))
    return {"stabsel": (["scheme", "rep", "auc"], rows)}


@dataclass
class OlsFit:
    slope: float
    intercept: float
    residuals: np.ndarray


def ols_fit(x, y) -> OlsFit:
    """Least-squares line ``y ~ intercept + slope * x``; residuals in input order."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise DegenerateDesign("ols_fit needs at least 3 paired observations")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-12 * max(1.0, float(x @ x)):
        raise DegenerateDesign("x is constant")
    slope = float(xc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    return OlsFit(slope, intercept, y - intercept - slope * x)


@dataclass
class NetworkResult:
    name: str
    n: int
    edge_density: float
    T: float
    intervals: dict  # scheme -> (chosen_q, lower, upper)


@dataclass
class RealDataReport:
    networks: list[NetworkResult]
    fit_n: OlsFit | None
    fit_log_density: OlsFit | None
    log_n: bool = False

    def rows(self) -> list[dict]:
        out = []
        for i, net in enumerate(self.networks):
            for scheme, (qc, lo, hi) in net.intervals.items():
                out.append(dict(
                    name=net.name, n=net.n, edge_density=net.edge_density, T=net.T,
                    scheme=scheme, chosen_q=qc, lower=lo, upper=hi,
                    resid_n="" if self.fit_n is None else self.fit_n.residuals[i],
                    resid_log_density="" if self.fit_log_density is None
                    else self.fit_log_density.residuals[i],
                ))
        return out


REALDATA_COLUMNS = ["name", "n", "edge_density", "T", "scheme", "chosen_q", "lower", "upper",
                    "resid_n", "resid_log_density"]


def analyze_networks(graphs: list[tuple[str, Graph]], schemes=("node", "row", "pair"),
                     candidates=DEFAULT_GRID, B: int = 200, B_inner: int | None = None,
                     alpha: float = 0.10, seed: int = 0, log_n: bool = False,
                     triples: str = "exact") -> RealDataReport:
    """Triangle-density intervals with data-chosen ``q`` for each network, then OLS of ``T``."""
    nets = []
    for i, (name, g) in enumerate(graphs):
        T = float(normalized_triangle_density(g).value)
        intervals = {}
        for s_idx, scheme in enumerate(schemes):
            stat = TriangleDensity(triples=triples if scheme == "pair" else "exact")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateRunWarning)
                sel = choose_q(g, stat, scheme, candidates, B=B, alpha=alpha, seed=seed,
                               B_inner=B_inner, key=(i, s_idx))
                run = bootstrap_ci(g, stat, scheme, sel.chosen, B, alpha, seed, key=(i, s_idx))
            intervals[scheme] = (sel.chosen, float(run.lower), float(run.upper))
        nets.append(NetworkResult(name, g.n, edge_density(g), T, intervals))
    fit_n = fit_rho = None
    if len(nets) >= 3:
        T = np.array([n.T for n in nets])
        ns = np.array([n.n for n in nets], dtype=np.float64)
        try:
            fit_n = ols_fit(np.log(ns) if log_n else ns, T)
        except DegenerateDesign:
            pass
        try:
            fit_rho = ols_fit(np.log([n.edge_density for n in nets]), T)
        except DegenerateDesign:
            pass
    return RealDataReport(nets, fit_n, fit_rho, log_n)


def run_realdata(cfg: ExperimentConfig) -> dict[str, tuple[list, list]]:
    one_based = bool(cfg.options.get("one_based", False))
    graphs = [(Path(p).stem, read_edge_list(p, one_based=one_based)) for p in cfg.inputs]
    report = analyze_networks(graphs, cfg.schemes, cfg.q_grid, cfg.B, cfg.B_inner, cfg.alpha,
                              cfg.seed, bool(cfg.options.get("log_n", False)),
                              cfg.options.get("triples", "exact"))
    return {"realdata": (REALDATA_COLUMNS, report.rows())}


RUNNERS = {"triangle": run_triangle, "communities": run_communities,
           "regression": run_regression, "stabsel": run_stabsel, "realdata": run_realdata}


def run_experiment(cfg: ExperimentConfig | dict, output_dir: str | Path | None = None) -> dict[str, Path]:
    """Run a task; returns the written paths keyed by table name (plus ``manifest``)."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    else:
        cfg.validate()
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    tables = RUNNERS[cfg.task](cfg)
    wall = time.perf_counter() - start
    paths = {}
    for name, (cols, rows) in tables.items():
        paths[name] = out / f"{name}.csv"
        write_csv(paths[name], cols, rows)
    manifest: dict[str, Any] = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "tables": {name: {"file": p.name, "columns": tables[name][0]} for name, p in paths.items()},
        "versions": {"netboot": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "threads": _rng.n_workers(),
        "wall_time_s": wall,
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, default=str))
    return paths
