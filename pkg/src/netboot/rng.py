"""Counter-based random streams and an order-preserving parallel map.

Every random draw in the package comes from ``stream(seed, *key)``: a Philox
generator whose state is a pure function of the master seed and an integer
key path such as ``(rep, j, b)``.  Work items can therefore run on any number
of threads, in any order, and still produce the same numbers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

# Key-path tags keep streams for different purposes disjoint.
GRAPH = 0
BOOT = 1
SPLIT = 2
HALF = 3
DESIGN = 4

THREADS_ENV = "NETBOOT_THREADS"


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` and the key path ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else rng)


def child_seed(seed: int, *key: int) -> int:
    """63-bit seed derived from ``(seed, *key)``, rooting a new key tree."""
    return int(stream(seed, *key).integers(0, 2**63 - 1))


def n_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, optionally on a thread pool.

    Results are written by index, so the output never depends on scheduling.
    """
    seq: Sequence[T] = list(items)
    workers = n_workers() if workers is None else workers
    if workers <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    out: list = [None] * len(seq)

    def run(i: int) -> None:
        out[i] = fn(seq[i])

    with ThreadPoolExecutor(max_workers=workers) as ex:
        list(ex.map(run, range(len(seq))))
    return out
