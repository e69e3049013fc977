"""Shared Monte Carlo plumbing: the estimate record, reproducible batch
streams, and order-independent reduction.

Samples are simulated in fixed windows of BATCH indices.  Window k draws all
of its randomness from a Philox generator keyed by (seed, k), and windows are
always simulated in full, so the value attached to one sample index never
depends on n_samples or on how many threads ran the estimate.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import StatisticsError

BATCH = 4096

THREADS_ENV = "CLEHOOK_THREADS"


@dataclass(frozen=True)
class McEstimate:
    """Universal Monte Carlo result record."""

    mean: float
    std_error: float
    n: int
    seed: int

    def within(self, target: float, n_se: float) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error


def batch_stream(seed: int, batch_index: int) -> np.random.Generator:
    """Deterministic generator for one sample window."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(batch_index)])
    return np.random.Generator(np.random.Philox(key=key))


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def run_batches(fn, n_batches: int, threads: int | None = None) -> list:
    """Evaluate fn(batch_index) for every window, deterministically ordered.

    Results are reduced in batch order, so the output is independent of the
    worker count.
    """
    workers = min(worker_count(threads), n_batches) if n_batches else 1
    if workers <= 1 or n_batches <= 1:
        return [fn(i) for i in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_batches)))


def binomial_estimate(hits: int, n: int, seed: int) -> McEstimate:
    """Mean and standard error of a Bernoulli sample (sample std over sqrt n)."""
    if n <= 0:
        raise StatisticsError("cannot estimate a probability from zero samples")
    p = hits / n
    if n > 1:
        se = math.sqrt(p * (1.0 - p) * n / (n - 1.0)) / math.sqrt(n)
    else:
        se = 0.0
    return McEstimate(mean=p, std_error=se, n=n, seed=seed)


def mean_estimate(total: float, total_sq: float, n: int, seed: int) -> McEstimate:
    """Mean and standard error from accumulated sum and sum of squares."""
    if n <= 0:
        raise StatisticsError("cannot average zero samples")
    mean = total / n
    if n > 1:
        var = max(total_sq - n * mean * mean, 0.0) / (n - 1.0)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return McEstimate(mean=mean, std_error=se, n=n, seed=seed)
