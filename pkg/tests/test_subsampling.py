from __future__ import annotations

from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import complete_graph, random_graph
from netboot import rng as nrng
from netboot.errors import EmptySample, InvalidFraction, InvalidInput, InvalidRank
from netboot.generators import generate_er
from netboot.graph import build_graph, n_pairs
from netboot.subsampling import (
    PartialGraph,
    SamplingPlan,
    complete_low_rank,
    low_rank_complete,
    node_sample,
    p_to_q,
    pair_sample,
    q_to_p,
    row_sample,
    with_retry,
)


@pytest.mark.parametrize("scheme, q, p", [("node", 0.25, 0.5), ("row", 0.75, 0.5), ("pair", 0.3, 0.3)])
def test_q_to_p_examples(scheme, q, p):
    assert q_to_p(scheme, q) == pytest.approx(p, abs=1e-15)


@given(st.sampled_from(["node", "row", "pair"]), st.floats(1e-6, 1.0))
def test_q_round_trip(scheme, q):
    assert abs(p_to_q(scheme, q_to_p(scheme, q)) - q) <= 1e-12


@pytest.mark.parametrize("q", [0.0, -0.1, 1.5, float("nan")])
def test_invalid_fraction(q):
    with pytest.raises(InvalidFraction):
        q_to_p("node", q)


def test_unknown_scheme():
    with pytest.raises(InvalidInput):
        SamplingPlan("edge", 0.5)


def test_node_sample_p1_identity():
    g = generate_er(50, 0.2, seed=1)
    h, kept = node_sample(g, SamplingPlan("node", 1.0), nrng.stream(0))
    assert h == g and kept.tolist() == list(range(50))


def test_node_sample_complete_stays_complete():
    g = complete_graph(10)
    for s in range(20):
        h, kept = node_sample(g, SamplingPlan("node", 0.25), nrng.stream(s))
        assert h.m == comb(len(kept), 2)


def test_node_sample_faithful_to_parent(rng):
    for s in range(30):
        g = random_graph(12, 0.4, rng)
        h, kept = node_sample(g, SamplingPlan("node", 0.4), nrng.stream(s))
        A = g.dense(bool)
        np.testing.assert_array_equal(h.dense(bool), A[np.ix_(kept, kept)])


def _band(values, target):
    values = np.asarray(values, dtype=float)
    se = values.std(ddof=1) / np.sqrt(len(values))
    return abs(values.mean() - target) <= 4 * se


def test_node_sample_moments():
    g = generate_er(300, 0.05, seed=2)
    plan = SamplingPlan("node", 0.25)
    kept = [len(node_sample(g, plan, nrng.stream(3, s))[1]) for s in range(500)]
    pairs = [comb(k, 2) for k in kept]
    assert _band(kept, 150)
    # m ~ Binomial(n, p) gives E[C(m, 2)] = p**2 C(n, 2) exactly
    assert _band(np.array(pairs) / comb(300, 2), 0.25)


def test_row_sample_p1_full():
    g = generate_er(40, 0.2, seed=1)
    pg = row_sample(g, SamplingPlan("row", 1.0), nrng.stream(0))
    assert pg.n_observed_pairs == n_pairs(40)
    np.testing.assert_array_equal(pg.observed_edges, g.edges)


def test_row_sample_hand_example():
    g = build_graph(3, [(0, 1), (1, 2)])
    pg = PartialGraph(g, "row", rows=np.array([True, False, False]))
    M = pg.mask_matrix()
    assert sorted(map(tuple, np.argwhere(np.triu(M)))) == [(0, 1), (0, 2)]
    assert pg.observed_edges.tolist() == [[0, 1]]


def test_row_mask_invariants(rng):
    g = random_graph(30, 0.3, rng)
    pg = row_sample(g, SamplingPlan("row", 0.4), nrng.stream(1))
    S = pg.rows
    M = pg.mask_matrix()
    np.testing.assert_array_equal(M, (S[:, None] | S[None, :]) & ~np.eye(30, dtype=bool))
    A = g.dense(bool)
    e = pg.observed_edges
    assert A[e[:, 0], e[:, 1]].all() and M[e[:, 0], e[:, 1]].all()
    assert pg.n_observed_pairs == np.triu(M).sum()


@pytest.mark.parametrize("scheme, q", [("row", 0.75), ("pair", 0.5), ("node", 0.3)])
def test_observed_pair_fraction(scheme, q):
    g = generate_er(300, 0.05, seed=4)
    plan = SamplingPlan(scheme, q)
    fr = []
    for s in range(500):
        out = {"node": node_sample, "row": row_sample, "pair": pair_sample}[scheme](
            g, plan, nrng.stream(5, s))
        obs = comb(len(out[1]), 2) if scheme == "node" else out.n_observed_pairs
        fr.append(obs / comb(300, 2))
    assert _band(fr, q)


def test_pair_sample_p1_full():
    g = generate_er(30, 0.3, seed=2)
    pg = pair_sample(g, SamplingPlan("pair", 1.0), nrng.stream(0))
    assert pg.pair_mask.all()
    np.testing.assert_array_equal(pg.observed_edges, g.edges)


def test_pair_sample_single_pair_of_triangle():
    g = complete_graph(3)
    pg = PartialGraph(g, "pair", pair_mask=np.array([True, False, False]))
    assert pg.observed_edges.tolist() == [[0, 1]]
    assert bool(pg.observed(1, 0)) and not bool(pg.observed(1, 2))
    assert not bool(pg.observed(1, 1))


def test_pair_mask_count_band():
    g = generate_er(300, 0.05, seed=2)
    pg = pair_sample(g, SamplingPlan("pair", 0.5), nrng.stream(7))
    N = comb(300, 2)
    assert abs(pg.n_observed_pairs - 0.5 * N) <= 4 * np.sqrt(N * 0.25)


def test_partial_never_invents_edges(rng):
    g = random_graph(25, 0.3, rng)
    A = g.dense(bool)
    for scheme in ("row", "pair"):
        f = row_sample if scheme == "row" else pair_sample
        pg = f(g, SamplingPlan(scheme, 0.3), nrng.stream(11))
        og = pg.observed_graph().dense(bool)
        assert not (og & ~A).any()
        assert not (og & ~pg.mask_matrix()).any()


def test_empty_sample_and_retry():
    g = build_graph(3, [(0, 1)])
    plan = SamplingPlan("node", 1e-12)
    with pytest.raises(EmptySample):
        node_sample(g, plan, nrng.stream(0))
    calls = []

    def draw():
        calls.append(1)
        if len(calls) < 4:
            raise EmptySample("empty")
        return "ok"

    assert with_retry(draw) == "ok" and len(calls) == 4
    with pytest.raises(EmptySample):
        with_retry(lambda: node_sample(g, plan, nrng.stream(0)), max_tries=3)


def test_completion_full_mask_full_rank_recovers_adjacency():
    g = generate_er(40, 0.2, seed=3)
    pg = PartialGraph(g, "pair", pair_mask=np.ones(n_pairs(40), dtype=bool))
    np.testing.assert_allclose(complete_low_rank(pg, 40), g.dense(), atol=1e-8)


def test_completion_rank_one_direction():
    gen = np.random.default_rng(0)
    n = 200
    u = gen.uniform(0.5, 1.5, n)
    u /= np.linalg.norm(u)
    M = 50 * np.outer(u, u)
    mask = np.triu(gen.random((n, n)) < 0.5, 1)
    mask |= mask.T
    C = low_rank_complete(M, mask, 1)
    v = np.linalg.eigh(C)[1][:, -1]
    assert abs(v @ u) > 0.9


def test_completion_zero_observed():
    g = build_graph(10, [])
    pg = PartialGraph(g, "pair", pair_mask=np.ones(45, dtype=bool))
    np.testing.assert_array_equal(complete_low_rank(pg, 3), 0)


@pytest.mark.parametrize("k", [0, 11])
def test_completion_invalid_rank(k):
    pg = PartialGraph(build_graph(10, [(0, 1)]), "pair", pair_mask=np.ones(45, dtype=bool))
    with pytest.raises(InvalidRank):
        complete_low_rank(pg, k)
