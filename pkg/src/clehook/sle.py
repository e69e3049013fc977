"""Monte Carlo estimator for the boundary-hitting event of the chordal trace.

The event {trace meets [1-eps, 1]} is decided by the swallowing order of the
two endpoint images: both follow dX = (2/X) dt - sqrt(kappa) dB with one
shared Brownian increment, so their gap X_b - X_a shrinks deterministically
and the trace hits the interval exactly when the left image reaches zero
while the gap is still positive.

Simulation scheme.  The squared left image over kappa is a squared radial
process of dimension 1 + 4/kappa, which has an exactly sampleable transition
law; the first zero visit is detected by the exact bridge kernel-ratio
Bernoulli per step, so the swallowing time is exact in law at any step size.
The gap rides along through its pathwise ODE,
d(gap)/gap = -2 dt / (X_a X_b), integrated with the same conditional-mean
bridge table that the force-point flow uses on near-zero steps.  A hit is a
first zero visit with the gap still above tol_separation; the residual
truncation bias scales like tol_separation^(8/kappa - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besselbridge import DEEP_RATIO, bridge_table, zero_touch
from .errors import DomainError, NonTerminationError, StatisticsError
from .mc import BATCH, McEstimate, batch_stream, binomial_estimate, run_batches

STEP_CAP = 10**9
BATCH_ITER_CAP = 10**7

DEFAULT_DT = 2e-3
DEFAULT_ADAPT = 5e-3
DEFAULT_TOL_SWALLOW = 1e-16
DEFAULT_TOL_SEPARATION = 1e-12


@dataclass(frozen=True)
class SleHitConfig:
    """Configuration of one hitting-probability estimate."""

    kappa: float
    eps: float
    n_samples: int
    seed: int
    dt: float = DEFAULT_DT
    adapt: float = DEFAULT_ADAPT
    tol_swallow: float = DEFAULT_TOL_SWALLOW
    tol_separation: float = DEFAULT_TOL_SEPARATION

    def __post_init__(self):
        if not 4.0 < self.kappa < 8.0:
            raise DomainError(f"kappa must lie in (4, 8), got {self.kappa!r}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps!r}")
        if self.dt <= 0.0 or self.adapt <= 0.0:
            raise DomainError("dt and adapt must be positive")
        if not 0.0 < self.tol_swallow < self.tol_separation:
            raise DomainError("need 0 < tol_swallow < tol_separation")
        if self.tol_separation >= 0.1 * self.eps:
            raise DomainError("tol_separation must be far below eps")


def _simulate_batch(cfg: SleHitConfig, batch_index: int) -> np.ndarray:
    """One full window of BATCH coupled pairs; returns the per-sample hit flags.

    Finished pairs are compacted out of the working arrays (the swallow-time
    law is heavy-tailed); the window as a whole stays deterministic.
    """
    kappa = cfg.kappa
    sq = math.sqrt(kappa)
    dim = 1.0 + 4.0 / kappa           # dimension of the squared left image / kappa
    touch = zero_touch(dim)
    table = bridge_table(dim)
    rng = batch_stream(cfg.seed, batch_index)
    c = cfg.adapt
    base = cfg.dt
    floor_scale = cfg.eps / 300.0
    dt_floor = c * floor_scale * floor_scale
    # state: z = X_a^2 / kappa (exact transitions), gap = X_b - X_a
    z = np.full(BATCH, (1.0 - cfg.eps) ** 2 / kappa)
    gap = np.full(BATCH, cfg.eps)
    idx = np.arange(BATCH)
    hit = np.zeros(BATCH, bool)
    iters = 0
    while len(z):
        iters += 1
        if iters > BATCH_ITER_CAP or iters * BATCH > STEP_CAP:
            raise NonTerminationError("hit simulation exceeded its step cap")
        # refine near zero, coarsen proportionally when the pair wanders high
        dt = np.where(z > 1.0, min(base, c) * z, np.minimum(base, c * z))
        dt = np.maximum(dt, dt_floor)
        zn = dt * rng.noncentral_chisquare(dim, z / dt)
        touched = rng.random(len(z)) < touch.prob(np.sqrt(z * zn) / dt)
        # integral of ds / X_a across the step (conditional mean)
        xa0 = sq * np.sqrt(z)
        xa1 = sq * np.sqrt(zn)
        inv_a = 0.5 * (1.0 / np.maximum(xa0, 1e-300) + 1.0 / np.maximum(xa1, 1e-300)) * dt
        deep = np.minimum(z, zn) <= DEEP_RATIO * dt
        if deep.any():
            j = np.where(deep)[0]
            inv_a[j] = table.mean_inv_sqrt(z[j] / dt[j], zn[j] / dt[j]) \
                * np.sqrt(dt[j]) / sq
        # integral of ds / X_b: the right image stays above the gap
        xb0 = xa0 + gap
        xb1 = xa1 + gap
        inv_b = 0.5 * (1.0 / np.maximum(xb0, 1e-300) + 1.0 / np.maximum(xb1, 1e-300)) * dt
        shrink = np.exp(-2.0 * np.maximum(inv_a - inv_b, 0.0)
                        / np.maximum(gap, 1e-300))
        gap = gap * shrink
        swallowed = touched | (xa1 <= cfg.tol_swallow)
        # the gap never grows, so a collapsed gap already decides "no hit"
        finished = swallowed | (gap < cfg.tol_separation)
        if finished.any():
            done = idx[finished]
            hit[done] = (swallowed & (gap >= cfg.tol_separation))[finished]
            keep = ~finished
            z, gap, idx = zn[keep], gap[keep], idx[keep]
        else:
            z = zn
    return hit


def simulate_hit_event(cfg: SleHitConfig, sample_index: int) -> bool:
    """Deterministic per-sample outcome; sample_index addresses one slot of its
    fixed window, so the answer never depends on n_samples."""
    if sample_index < 0 or sample_index >= cfg.n_samples:
        raise DomainError(f"sample_index {sample_index} outside [0, {cfg.n_samples})")
    flags = _simulate_batch(cfg, sample_index // BATCH)
    return bool(flags[sample_index % BATCH])


def estimate_hit_probability(cfg: SleHitConfig, threads: int | None = None) -> McEstimate:
    """Binomial estimate over n_samples coupled-pair simulations.

    Windows may run on any number of threads; the reduction is ordered, so the
    result is bit-identical for every worker count.
    """
    if cfg.n_samples < 100:
        raise StatisticsError("need at least 100 samples for a hitting estimate")
    n_batches = (cfg.n_samples + BATCH - 1) // BATCH
    flags = run_batches(lambda k: _simulate_batch(cfg, k), n_batches, threads)
    hits = 0
    for k, batch_flags in enumerate(flags):
        lo = k * BATCH
        take = min(BATCH, cfg.n_samples - lo)
        hits += int(batch_flags[:take].sum())
    return binomial_estimate(hits, cfg.n_samples, cfg.seed)
