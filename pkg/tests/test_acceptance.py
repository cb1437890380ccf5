"""Acceptance suite: Monte-Carlo reproductions of the method's qualitative claims
plus exact property checks.  Each test prints one ``[criterion N] PASS/FAIL`` line.

The full suite takes roughly 25 minutes on one core; criteria 1 and 2 share a
single 200-rep coverage table.
"""

from __future__ import annotations

import filecmp

import numpy as np
import pytest

from conftest import brute_triangles, random_graph
from netboot.bootstrap import bootstrap_ci, choose_q, coverage_experiment
from netboot.community import BetheHessianK, bethe_hessian_k
from netboot.generators import SbmParams, generate_er, generate_sbm
from netboot.graph import laplacian, n_pairs
from netboot.harness import run_experiment
from netboot.regression import (
    CohesionBeta,
    CohesionDesign,
    beta_uncertainty,
    fit_cohesion,
    fit_cohesion_lasso,
    kkt_violation,
)
from netboot.statistics import TriangleDensity, normalized_triangle_density, partial_triangle_density
from netboot.subsampling import PartialGraph, p_to_q, q_to_p

SCHEMES = ("node", "row", "pair")
GRID = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
CANDIDATES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(criterion: int, ok: bool, detail: str) -> None:
        line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:
            print(line)

    return emit


@pytest.fixture(scope="module")
def er_table():
    gen = lambda r: generate_er(300, 0.05, r)  # noqa: E731
    return {s: coverage_experiment(gen, TriangleDensity(), s, GRID, B=200, alpha=0.10, reps=200,
                                   seed=101 + i)
            for i, s in enumerate(SCHEMES)}


def test_criterion_1_coverage_small_q(er_table, report):
    cov = {s: {r.q: r.coverage for r in er_table[s] if r.q <= 0.5} for s in SCHEMES}
    ok = all(c >= 0.88 for s in SCHEMES for c in cov[s].values())
    detail = "; ".join(f"{s}: " + ", ".join(f"q={q}:{c:.3f}" for q, c in cov[s].items())
                       for s in SCHEMES)
    report(1, ok, f"coverage >= 0.88 for q <= 0.5 ({detail})")
    assert ok


def test_criterion_2_width_monotone(er_table, report):
    ok = True
    parts = []
    for s in SCHEMES:
        rows = er_table[s]
        w = np.array([r.mean_width for r in rows])
        se = np.array([r.width_se for r in rows])
        inversions = [i for i in range(len(w) - 1) if w[i + 1] >= w[i]]
        tolerated = len(inversions) <= 1 and all(w[i + 1] - w[i] <= se[i] + se[i + 1]
                                                  for i in inversions)
        ok &= tolerated
        parts.append(f"{s}: " + " > ".join(f"{x:.3f}" for x in w)
                     + (f" (inversions at {inversions})" if inversions else ""))
    report(2, ok, "mean width decreasing in q; " + "; ".join(parts))
    assert ok


def test_criterion_3_sparse_pathology(report):
    gen = lambda r: generate_er(300, 0.01, r)  # noqa: E731
    rows = coverage_experiment(gen, TriangleDensity(), "pair", [0.2, 0.5], B=200, alpha=0.10,
                               reps=200, seed=303)
    lo, hi = rows
    degenerate_ok = lo.frac_degenerate >= 0.5
    width_ok = lo.mean_width < 0.1 * hi.mean_width
    report(3, degenerate_ok and width_ok,
           f"degenerate fraction at q=0.2: {lo.frac_degenerate:.3f} (need >= 0.5); "
           f"mean width q=0.2: {lo.mean_width:.3f} vs q=0.5: {hi.mean_width:.3f} (need ratio < 0.1); "
           f"median widths {lo.extra['median_width']:.3f} / {hi.extra['median_width']:.3f}; "
           f"zero-width fraction at q=0.2: {lo.extra['frac_zero_width']:.3f}")
    assert degenerate_ok
    assert width_ok


def test_criterion_4_q_selection(report):
    params = SbmParams.equal(2000, 3, 0.02, 5)
    budgets = {"node": (TriangleDensity(), 20, 60),
               "pair": (TriangleDensity(triples="expected"), 10, 40)}
    chosen = {s: [] for s in budgets}
    for r in range(20):
        g = generate_sbm(params, seed=4000 + r)
        for s, (stat, B, B_inner) in budgets.items():
            sel = choose_q(g, stat, s, CANDIDATES, B=B, alpha=0.10, seed=r, B_inner=B_inner)
            chosen[s].append(sel.chosen)
    frac = {s: float(np.mean(np.isin(v, (0.1, 0.2)))) for s, v in chosen.items()}
    ok = all(f >= 0.8 for f in frac.values())
    detail = "; ".join(f"{s}: {frac[s]:.2f} (" + ", ".join(
        f"{q}:{chosen[s].count(q)}" for q in CANDIDATES if chosen[s].count(q)) + ")" for s in frac)
    report(4, ok, f"fraction choosing q in {{0.1, 0.2}} >= 0.8; {detail}")
    assert ok


def test_criterion_5_communities(report):
    easy = SbmParams.equal(600, 3, 0.1, 5)
    k_easy = np.array([bethe_hessian_k(generate_sbm(easy, seed=5000 + s)).k_hat for s in range(100)])
    hard = SbmParams.equal(600, 3, 0.05, 2)
    k_full, k_sub = [], {"node": [], "row": []}
    for s in range(100):
        g = generate_sbm(hard, seed=6000 + s)
        k_full.append(bethe_hessian_k(g).k_hat)
        for scheme in k_sub:
            run = bootstrap_ci(g, BetheHessianK(), scheme, 0.5, B=10, seed=s, warn=False)
            k_sub[scheme].extend(run.replicates.tolist())
    match = float(np.mean(k_easy == 3))
    med = {s: float(np.median(v)) for s, v in k_sub.items()}
    ok = match >= 0.9 and all(m < 3 for m in med.values())
    report(5, ok, f"easy regime exact match {match:.2f} (need >= 0.9); hard regime median K "
                  f"on q=0.5 subsamples: node {med['node']}, row {med['row']} (need < 3); "
                  f"full-graph hard-regime median {np.median(k_full)} "
                  f"(counts {np.bincount(k_full).tolist()})")
    assert ok


def test_criterion_6_oracles(report):
    rng = np.random.default_rng(6)
    tri_ok = True
    for _ in range(200):
        g = random_graph(int(rng.integers(3, 51)), float(rng.uniform(0.02, 0.6)), rng)
        tri_ok &= len(g.triangles) == brute_triangles(g)
    dens_err = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 60))
        g = random_graph(n, float(rng.uniform(0.1, 0.6)), rng)
        if g.m == 0:
            continue
        ref = normalized_triangle_density(g).value
        for pg in (PartialGraph(g, "pair", pair_mask=np.ones(n_pairs(n), dtype=bool)),
                   PartialGraph(g, "row", rows=np.ones(n, dtype=bool))):
            dens_err = max(dens_err, abs(partial_triangle_density(pg).value - ref))
    rt_err = max(abs(p_to_q(s, q_to_p(s, q)) - q)
                 for s in SCHEMES for q in np.concatenate([rng.uniform(1e-9, 1, 2000), [1.0]]))
    ok = tri_ok and dens_err <= 1e-12 and rt_err <= 1e-12
    report(6, ok, f"triangle counts exact on 200 graphs: {tri_ok}; full-mask density error "
                  f"{dens_err:.1e}; q round-trip error {rt_err:.1e}")
    assert ok


def test_criterion_7_solvers(report):
    rng = np.random.default_rng(7)
    worst_grad = worst_kkt = worst_red = 0.0
    monotone = converged = True
    for _ in range(50):
        n, p = int(rng.integers(10, 201)), int(rng.integers(1, 21))
        L = laplacian(random_graph(n, float(rng.uniform(0.02, 0.3)), rng))
        X = rng.normal(size=(n, p))
        Y = X @ rng.normal(size=p) + rng.normal(size=n)
        lam1 = float(10 ** rng.uniform(-3, 2))
        fit = fit_cohesion(X, Y, L, lam1)
        r = fit.node_effects + X @ fit.beta - Y
        grad = np.concatenate([2 * r + 2 * lam1 * L @ fit.node_effects, 2 * X.T @ r])
        scale = 1 + max(np.abs(Y).max(), np.abs(X.T @ Y).max())
        worst_grad = max(worst_grad, np.abs(grad).max() / scale)
        lam2 = float(rng.uniform(0.01, 0.9)) * np.abs(X.T @ Y).max()
        las = fit_cohesion_lasso(X, Y, L, lam1, lam2)
        h = np.array(las.history)
        monotone &= bool((np.diff(h) <= 1e-12 * (1 + np.abs(h[1:]))).all())
        converged &= las.converged
        worst_kkt = max(worst_kkt, kkt_violation(las, X, Y, L, lam1, lam2))
        red = fit_cohesion_lasso(X, Y, L, lam1, 0.0)
        worst_red = max(worst_red, abs(red.objective - fit.objective))
    ok = worst_grad <= 1e-6 and monotone and converged and worst_kkt <= 1e-6 and worst_red <= 1e-6
    report(7, ok, f"max relative gradient {worst_grad:.1e}; lasso monotone {monotone}, converged "
                  f"{converged}, max KKT violation {worst_kkt:.1e}; lambda2=0 objective gap {worst_red:.1e}")
    assert ok


def test_criterion_8_regression_bootstrap(report):
    design = CohesionDesign(rho=0.2, t=10, sigma_alpha=0.1)
    grid = CANDIDATES
    widths = {s: np.zeros(len(grid)) for s in SCHEMES}
    for d in range(3):
        g, X, Y, _, beta = design.draw(8000 + d)
        for i, s in enumerate(SCHEMES):
            for j, q in enumerate(grid):
                res = beta_uncertainty(g, X, Y, s, q, 1.0, B=100, seed=d, key=(i, j))
                widths[s][j] += float(res.widths.mean()) / 3
    width_ok = all((np.diff(w) < 0).all() for w in widths.values())
    chosen = {s: [] for s in SCHEMES}
    for r in range(20):
        g, X, Y, _, _ = design.draw(8100 + r)
        stat = CohesionBeta(X, Y, 1.0)
        for s in SCHEMES:
            chosen[s].append(choose_q(g, stat, s, grid, B=8, B_inner=20, seed=r).chosen)
    frac = {s: float(np.mean(np.array(v) == 0.1)) for s, v in chosen.items()}
    ok = width_ok and all(f >= 0.7 for f in frac.values())
    wtxt = "; ".join(f"{s}: " + " > ".join(f"{x:.3f}" for x in w) for s, w in widths.items())
    report(8, ok, f"mean CI width decreasing in q: {width_ok} ({wtxt}); fraction choosing q=0.1: "
                  + ", ".join(f"{s} {f:.2f}" for s, f in frac.items()))
    assert ok


def test_criterion_9_determinism(tmp_path, monkeypatch, report):
    configs = [
        {"task": "triangle", "generator": {"model": "er", "n": 300, "rho": 0.05},
         "q_grid": [0.2, 0.5, 0.8], "B": 50, "reps": 4, "seed": 9},
        {"task": "communities", "generator": {"model": "sbm", "n": 300, "K": 3, "rho": 0.1, "t": 5},
         "q_grid": [0.5], "B": 8, "reps": 2, "seed": 9},
        {"task": "regression", "generator": {"sizes": [60, 60, 60], "rho": 0.2, "t": 10},
         "schemes": ["node", "pair", "naive"], "q_grid": [0.1, 0.5], "B": 12, "B_inner": 6,
         "reps": 2, "seed": 9, "options": {"choose_q": True, "B_outer": 3}},
    ]
    same = True
    names = []
    for i, cfg in enumerate(configs):
        out = {}
        for threads in ("1", "4"):
            monkeypatch.setenv("NETBOOT_THREADS", threads)
            out[threads] = run_experiment(cfg, tmp_path / f"{i}_{threads}")
        for name, path in out["1"].items():
            if name == "manifest":
                continue
            names.append(name)
            same &= filecmp.cmp(path, out["4"][name], shallow=False)
    report(9, same, f"byte-identical CSVs at NETBOOT_THREADS=1 and 4 for {', '.join(names)}")
    assert same
