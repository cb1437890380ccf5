from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm, spearmanr

from netboot.bootstrap import (
    bootstrap_ci,
    choose_q,
    coverage_experiment,
    percentile_ci,
    percentile_indices,
    split_halves,
)
from netboot.errors import DegenerateRunWarning, InvalidFraction, InvalidInput, SelectionFailed
from netboot.generators import generate_er
from netboot import rng as nrng
from netboot.statistics import Constant, Statistic, StatisticValue, TriangleDensity


class KeptFraction(Statistic):
    """Fraction of nodes kept by a node sample: Binomial(n, p) / n."""

    def on_graph(self, g):
        return StatisticValue(1.0)

    def on_induced(self, parent, keep):
        return StatisticValue(keep.mean())


class NeverDefined(Statistic):
    def on_graph(self, g):
        return StatisticValue(0.0, defined=False)

    def on_induced(self, parent, keep):
        return StatisticValue(0.0, defined=False)

    def on_partial(self, pg):
        return StatisticValue(0.0, defined=False)


@pytest.fixture(scope="module")
def er300():
    return generate_er(300, 0.05, seed=42)


def test_indices_b1000():
    assert percentile_indices(1000, 0.10) == (50, 950)


@pytest.mark.parametrize("B, alpha, lu", [(200, 0.10, (10, 190)), (2, 0.10, (1, 2)), (19, 0.5, (4, 15))])
def test_indices_small(B, alpha, lu):
    assert percentile_indices(B, alpha) == lu


@given(st.integers(2, 5000), st.floats(0.001, 0.999))
def test_indices_valid(B, alpha):
    l, u = percentile_indices(B, alpha)
    assert 1 <= l <= u <= B


def test_percentile_ci_endpoints_and_permutation(rng):
    v = rng.normal(size=200)
    lo, hi, l, u = percentile_ci(v, 0.1)
    assert lo in v and hi in v and lo <= hi
    lo2, hi2, *_ = percentile_ci(rng.permutation(v), 0.1)
    assert (lo, hi) == (lo2, hi2)


def test_constant_statistic_ci(er300):
    run = bootstrap_ci(er300, Constant(3.0), "row", 0.3, B=50, seed=1)
    assert run.lower == run.upper == 3.0
    assert run.covers(3.0)
    assert run.B == 50


@pytest.mark.parametrize("scheme", ["node", "row", "pair"])
def test_run_invariants(er300, scheme):
    run = bootstrap_ci(er300, TriangleDensity(), scheme, 0.4, B=60, seed=3)
    assert len(run.replicates) == 60
    assert run.lower <= run.upper
    assert run.lower in run.replicates and run.upper in run.replicates
    d = run.to_dict()
    assert d["scheme"] == scheme and d["B"] == 60


def test_same_seed_bit_identical(er300):
    a = bootstrap_ci(er300, TriangleDensity(), "pair", 0.3, B=40, seed=7)
    b = bootstrap_ci(er300, TriangleDensity(), "pair", 0.3, B=40, seed=7)
    np.testing.assert_array_equal(a.replicates, b.replicates)
    c = bootstrap_ci(er300, TriangleDensity(), "pair", 0.3, B=40, seed=8)
    assert not np.array_equal(a.replicates, c.replicates)


def test_thread_count_does_not_change_results(er300, monkeypatch):
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("NETBOOT_THREADS", threads)
        out.append(bootstrap_ci(er300, TriangleDensity(), "node", 0.3, B=70, seed=2).replicates)
    np.testing.assert_array_equal(out[0], out[1])


def test_endpoints_converge_to_quantiles():
    g = generate_er(10_000, 0.0, seed=0)
    p, n = 0.5, 10_000
    sd = np.sqrt(p * (1 - p) / n)
    for B in (500, 5000):
        run = bootstrap_ci(g, KeptFraction(), "node", p * p, B=B, alpha=0.10, seed=B)
        z = norm.ppf(0.95)
        se_q = np.sqrt(0.05 * 0.95 / B) / norm.pdf(z) * sd
        assert abs(run.lower - (p - z * sd)) <= 2 * se_q + 1 / n
        assert abs(run.upper - (p + z * sd)) <= 2 * se_q + 1 / n


def test_degenerate_warning(er300):
    with pytest.warns(DegenerateRunWarning):
        run = bootstrap_ci(er300, NeverDefined(), "node", 0.3, B=10)
    assert run.degenerate_run and run.warning and run.frac_degenerate == 1.0


def test_bad_arguments(er300):
    with pytest.raises(InvalidInput):
        bootstrap_ci(er300, TriangleDensity(), "node", 0.3, B=1)
    with pytest.raises(InvalidFraction):
        bootstrap_ci(er300, TriangleDensity(), "node", 1.2)
    with pytest.raises(InvalidInput):
        bootstrap_ci(er300, TriangleDensity(), "snowball", 0.3)


def test_statistic_by_name(er300):
    run = bootstrap_ci(er300, "edge_density", "pair", 0.5, B=20)
    assert 0.03 < run.lower <= run.upper < 0.07


@pytest.mark.parametrize("n", [7, 8])
def test_split_halves(n):
    a, b = split_halves(n, nrng.stream(1))
    assert len(a) == (n + 1) // 2 and len(b) == n // 2
    assert sorted(np.concatenate([a, b]).tolist()) == list(range(n))


def test_choose_q_singleton(er300):
    sel = choose_q(er300, TriangleDensity(), "node", [0.4], B=3, B_inner=10)
    assert sel.chosen == 0.4


def test_choose_q_constant_picks_smallest(er300):
    sel = choose_q(er300, Constant(1.0), "pair", [0.5, 0.2, 0.8], B=3, B_inner=10)
    assert (sel.coverages == 1).all()
    assert sel.chosen == 0.2


def test_choose_q_all_degenerate(er300):
    with pytest.raises(SelectionFailed):
        choose_q(er300, NeverDefined(), "node", [0.2, 0.4], B=2, B_inner=4)


def test_choose_q_validation(er300):
    with pytest.raises(InvalidInput):
        choose_q(er300, Constant(), "node", [])
    with pytest.raises(InvalidFraction):
        choose_q(er300, Constant(), "node", [0.0, 0.5])


def test_choose_q_record(er300):
    sel = choose_q(er300, TriangleDensity(), "row", [0.2, 0.6], B=4, B_inner=20, seed=3)
    assert ((0 <= sel.coverages) & (sel.coverages <= 1)).all()
    target = (sel.coverages - 0.9) ** 2
    assert sel.chosen == sel.candidates[np.argmin(target)]
    assert sel.to_dict()["B_inner"] == 20


def test_coverage_widths_shrink_node():
    gen = lambda r: generate_er(300, 0.05, r)  # noqa: E731
    grid = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    rows = coverage_experiment(gen, TriangleDensity(), "node", grid, B=40, reps=8, seed=1)
    widths = [r.mean_width for r in rows]
    assert spearmanr(grid, widths).statistic < 0
    cov = [r.coverage for r in rows]
    assert cov[-1] <= cov[0]


def test_sparse_pair_degenerate():
    gen = lambda r: generate_er(300, 0.01, r)  # noqa: E731
    rows = coverage_experiment(gen, TriangleDensity(), "pair", [0.2], B=40, reps=5, seed=2)
    assert rows[0].frac_degenerate > 0.5
