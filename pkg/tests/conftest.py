from __future__ import annotations

import itertools

import numpy as np
import pytest

from netboot.graph import Graph, build_graph


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return build_graph(n, np.column_stack([iu[keep], ju[keep]]))


def brute_triangles(g: Graph) -> int:
    A = g.dense(bool)
    return sum(1 for i, j, k in itertools.combinations(range(g.n), 3)
               if A[i, j] and A[j, k] and A[i, k])


def complete_graph(n: int) -> Graph:
    return build_graph(n, list(itertools.combinations(range(n), 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
