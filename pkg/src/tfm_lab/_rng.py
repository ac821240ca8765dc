"""Seed handling: deterministic substreams and chunked Monte Carlo sums.

Work is split into fixed-size chunks, each with its own child stream of the root
``SeedSequence``; results therefore do not depend on how many threads run them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TFM_LAB_THREADS", "1")))
    except ValueError:
        return 1


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return seed.bit_generator.seed_seq
    return np.random.SeedSequence(seed)


def substreams(seed, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in seed_sequence(seed).spawn(count)]


def chunk_sizes(total: int, chunk: int) -> list[int]:
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def chunked_map(work, total: int, seed, chunk: int) -> list:
    """Run ``work(generator, size)`` over chunks of ``total`` items; results in chunk order."""
    sizes = chunk_sizes(total, chunk)
    streams = substreams(seed, len(sizes))
    threads = thread_count()
    if threads == 1 or len(sizes) == 1:
        return [work(g, s) for g, s in zip(streams, sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, streams, sizes))


def chunked_sum(work, total: int, seed, chunk: int):
    parts = chunked_map(work, total, seed, chunk)
    return sum(parts[1:], parts[0])


def fsum_axis0(parts) -> np.ndarray:
    """Exactly rounded elementwise sum of a list of equally shaped arrays."""
    stacked = np.stack([np.asarray(p, dtype=float) for p in parts])
    flat = stacked.reshape(len(parts), -1)
    return np.array([math.fsum(col) for col in flat.T]).reshape(stacked.shape[1:])


class MeanAccumulator:
    """Streaming mean and standard error with exactly rounded sums."""

    def __init__(self, shape=()):
        self.count = 0
        self._sums = []
        self._sq = []
        self.shape = shape

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.count += x.shape[0]
        self._sums.append(x.sum(axis=0))
        self._sq.append((x * x).sum(axis=0))

    def result(self):
        s = fsum_axis0(self._sums)
        sq = fsum_axis0(self._sq)
        mean = s / self.count
        var = np.maximum(sq / self.count - mean * mean, 0.0) * self.count / max(self.count - 1, 1)
        return mean, np.sqrt(var / self.count)


def mean_se(samples, axis=0):
    x = np.asarray(samples, dtype=float)
    n = x.shape[axis]
    return x.mean(axis=axis), x.std(axis=axis, ddof=1) / math.sqrt(n)
