"""Driving triple (X, O, W) of the force-point flow for kappa in (4, 8), its
local time at zero via upcrossing counts, and the derived estimators.

X is the reflected radial process of dimension 3 - 8/kappa, simulated by exact
squared-process transitions (noncentral chi-square), so there is no reflection
bias at any step size.  O integrates 2/(sqrt(kappa) X); W = O - sqrt(kappa) X.
Tracked points advance through dV = 2 dt / (V - W).

Three sub-step events are resolved by exact or bridge Bernoullis rather than
grid inspection, which is what keeps the estimators unbiased at practical step
sizes: zero visits of X (kernel-ratio probability), level first passages
(Brownian-bridge crossing in the squared variable), and swallow first passages
of the tracked gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .besselbridge import DEEP_RATIO, bridge_table, zero_touch
from .errors import DomainError, NonTerminationError
from .hookup import KappaContext
from .mc import BATCH, McEstimate, batch_stream, mean_estimate, run_batches

STEP_CAP = 10**9
BATCH_ITER_CAP = 4 * 10**6

DEFAULT_UP_LEVEL = 1e-3
DEFAULT_CZ = 5e-3        # step fraction of the squared-radius scale
DEFAULT_CG = 2.5e-3      # step fraction of the swallow timescale
G_TOL_REL = 1e-12        # relative depth of the swallow absorption


@dataclass(frozen=True)
class LocalTimeConfig:
    """Counting-level configuration for the upcrossing local time."""

    up_level: float
    dt: float
    seed: int
    n_samples: int

    def __post_init__(self):
        if self.up_level <= 0.0:
            raise DomainError("up_level must be positive")
        if self.dt <= 0.0 or self.dt > self.up_level**2 / 100.0:
            raise DomainError("need 0 < dt <= up_level^2 / 100 to resolve the counting level")
        if self.n_samples <= 0:
            raise DomainError("n_samples must be positive")


def default_localtime_config(seed: int, n_samples: int,
                             up_level: float = DEFAULT_UP_LEVEL) -> LocalTimeConfig:
    return LocalTimeConfig(up_level=up_level, dt=up_level**2 / 100.0,
                           seed=seed, n_samples=n_samples)


@dataclass
class TrackedPoint:
    b: float
    v: float
    swallowed_at: float | None = None


@dataclass
class DrivingPath:
    """Stored sample of the driving triple on its (adaptive) grid."""

    kappa: float
    seed: int
    sample_index: int
    dt_floor: float
    horizon: float
    times: np.ndarray
    x: np.ndarray
    o: np.ndarray
    w: np.ndarray
    touched: np.ndarray          # per-step zero-visit flags (len = len(times) - 1)
    tracked: list[TrackedPoint] = field(default_factory=list)
    up_level: float = DEFAULT_UP_LEVEL


def _check_ctx(ctx: KappaContext):
    if not ctx.simulable:
        raise DomainError("the flow simulator needs kappa in (4, 8)")


class _FlowKernel:
    """Shared per-kappa machinery for the vectorised stepping loops."""

    def __init__(self, ctx: KappaContext, up_level: float, dt_floor: float,
                 cz: float = DEFAULT_CZ, cg: float = DEFAULT_CG):
        _check_ctx(ctx)
        self.kappa = ctx.kappa
        self.d = ctx.bessel_dim
        self.sq = math.sqrt(ctx.kappa)
        self.up_level = up_level
        self.level_z = (up_level / self.sq) ** 2
        self.dt_floor = dt_floor
        self.cz = cz
        self.cg = cg
        self.touch = zero_touch(self.d)
        self.table = bridge_table(self.d)
        self.g_endgame = up_level / (10.0 * self.sq)

    def step_dt(self, z: np.ndarray, g: np.ndarray | None) -> np.ndarray:
        """Adaptive step: a fraction of the squared-radius scale, refined by the
        swallow timescale, floored for counting resolution (the floor releases
        quadratically once the gap enters its endgame)."""
        dt = self.cz * np.maximum(z, 0.0)
        if g is not None:
            x = np.sqrt(np.maximum(z, 0.0))
            tsc = g * g * self.sq * x / (2.0 * (self.sq * x + g) + 1e-300)
            tsc = np.where(x > 0.0, tsc, 0.5 * g * g)
            dt = np.minimum(dt, 2.0 * self.cg * tsc)
            floor = self.dt_floor * np.minimum(1.0, (g / self.g_endgame) ** 2)
        else:
            floor = np.full_like(dt, self.dt_floor)
        return np.maximum(np.maximum(dt, floor), 1e-280)

    def transition(self, rng, z: np.ndarray, dt: np.ndarray) -> np.ndarray:
        return dt * rng.noncentral_chisquare(self.d, z / dt)

    def o_increment(self, z0: np.ndarray, z1: np.ndarray, dt: np.ndarray) -> np.ndarray:
        """Conditional-mean increment of O across one step."""
        ei = 0.5 * (1.0 / np.maximum(np.sqrt(z0), 1e-300)
                    + 1.0 / np.maximum(np.sqrt(z1), 1e-300))
        deep = np.minimum(z0, z1) <= DEEP_RATIO * dt
        if deep.any():
            i = np.where(deep)[0]
            ei[i] = self.table.mean_inv_sqrt(z0[i] / dt[i], z1[i] / dt[i]) / np.sqrt(dt[i])
        return 2.0 * dt / self.sq * ei

    def touch_flags(self, rng, z0: np.ndarray, z1: np.ndarray, dt: np.ndarray) -> np.ndarray:
        w = np.sqrt(z0 * z1) / dt
        return rng.random(z0.shape) < self.touch.prob(w)

    def cross_flags(self, rng, z0: np.ndarray, z1: np.ndarray, dt: np.ndarray,
                    level_z: float) -> np.ndarray:
        """Level first passage within the step: grid exceedance or bridge crossing."""
        gridc = z1 >= level_z
        sig2 = 2.0 * (0.5 * (z0 + z1) + level_z)
        expo = -2.0 * np.maximum(level_z - z0, 0.0) * np.maximum(level_z - z1, 0.0) / (sig2 * dt)
        return gridc | (rng.random(z0.shape) < np.exp(expo))

    def swallow_flags(self, rng, g0: np.ndarray, g1: np.ndarray, dt: np.ndarray,
                      g_tol: float) -> np.ndarray:
        """Gap first passage to ~0 within the step (bridge crossing of the gap)."""
        hit = g1 <= g_tol
        expo = -2.0 * np.maximum(g0, 0.0) * np.maximum(g1, 0.0) / (self.kappa * dt)
        return hit | (rng.random(g0.shape) < np.exp(expo))


# ---------------------------------------------------------------------------
# stored single paths
# ---------------------------------------------------------------------------

def simulate_driving_pair(ctx: KappaContext, horizon: float, dt: float, seed: int,
                          sample_index: int = 0, tracked_points: tuple[float, ...] = (),
                          up_level: float = DEFAULT_UP_LEVEL,
                          max_steps: int = 10**7) -> DrivingPath:
    """Simulate one driving triple from w = o = 0 up to the capacity-time horizon.

    The path is stored on its adaptive grid together with per-step zero-visit
    flags; tracked points are advanced through the Loewner ode and marked with
    their swallowing times.  Deterministic per (seed, sample_index).
    """
    _check_ctx(ctx)
    if horizon <= 0.0:
        raise DomainError("horizon must be positive")
    if any(b <= 0.0 for b in tracked_points):
        raise DomainError("tracked points must start strictly right of the force point")
    kern = _FlowKernel(ctx, up_level, dt)
    rng = np.random.Generator(np.random.Philox(
        key=[np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(2**62 + sample_index)]))
    points = [TrackedPoint(b=float(b), v=float(b)) for b in tracked_points]
    t, z, o = 0.0, 0.0, 0.0
    times, xs, os_, touch = [0.0], [0.0], [0.0], []
    for _ in range(min(max_steps, STEP_CAP)):
        if t >= horizon:
            break
        live = [p for p in points if p.swallowed_at is None]
        w = o - kern.sq * math.sqrt(z)
        garr = np.array([max(min(p.v - w for p in live), 1e-300)]) if live else None
        dte = float(kern.step_dt(np.array([z]), garr)[0])
        dte = min(dte, horizon - t)
        zn = float(kern.transition(rng, np.array([z]), np.array([dte]))[0])
        touched = bool(kern.touch_flags(rng, np.array([z]), np.array([zn]),
                                        np.array([dte]))[0])
        do = float(kern.o_increment(np.array([z]), np.array([zn]), np.array([dte]))[0])
        o_new = o + do
        w_new = o_new - kern.sq * math.sqrt(zn)
        t_new = t + dte
        for p in live:
            g = p.v - w
            p.v += 2.0 * dte / max(g, 1e-300)
            if p.v - w_new <= G_TOL_REL * p.b:
                p.swallowed_at = t_new
        times.append(t_new)
        xs.append(math.sqrt(zn))
        os_.append(o_new)
        touch.append(touched)
        t, z, o = t_new, zn, o_new
    else:
        raise NonTerminationError("simulate_driving_pair exceeded max_steps")
    times_arr = np.array(times)
    x = np.array(xs)
    o_arr = np.array(os_)
    return DrivingPath(kappa=ctx.kappa, seed=seed, sample_index=sample_index,
                       dt_floor=dt, horizon=horizon,
                       times=times_arr, x=x, o=o_arr, w=o_arr - kern.sq * x,
                       touched=np.array(touch, dtype=bool), tracked=points,
                       up_level=up_level)


def swallow_time(path: DrivingPath, b: float, max_doublings: int = 16) -> float:
    """First time at which b is swallowed; extends the path deterministically
    (same seed and sample index) with a doubled horizon until found."""
    if b <= 0.0:
        raise DomainError("b must lie strictly right of the force point start")
    from .hookup import make_context

    current = path
    for _ in range(max_doublings):
        hit = _swallow_on_grid(current, b)
        if hit is not None:
            return hit
        ctx = make_context(current.kappa)
        current = simulate_driving_pair(
            ctx, horizon=2.0 * current.horizon, dt=current.dt_floor,
            seed=current.seed, sample_index=current.sample_index,
            tracked_points=tuple(p.b for p in current.tracked),
            up_level=current.up_level)
    raise NonTerminationError(f"point {b} not swallowed within the extension cap")


def _swallow_on_grid(path: DrivingPath, b: float) -> float | None:
    for p in path.tracked:
        if p.b == b:
            return p.swallowed_at
    v = b
    for i in range(len(path.times) - 1):
        dte = path.times[i + 1] - path.times[i]
        g = v - path.w[i]
        if g <= G_TOL_REL * b:
            return float(path.times[i])
        v += 2.0 * dte / max(g, 1e-300)
        if v - path.w[i + 1] <= G_TOL_REL * b:
            return float(path.times[i + 1])
    return None


def local_time_estimate(path: DrivingPath, ltc: LocalTimeConfig, up_to: float) -> float:
    """Normalised upcrossing count of O - W from the zero set to the counting
    level before `up_to`, evaluated on the stored path."""
    sq = math.sqrt(path.kappa)
    lvl_x = ltc.up_level / sq
    theta_exp = 8.0 / path.kappa - 1.0
    armed = True  # the path starts on the zero set
    count = 0
    for i in range(len(path.times) - 1):
        if path.times[i + 1] > up_to:
            break
        if path.touched[i]:
            armed = True
        if armed and path.x[i + 1] >= lvl_x:
            count += 1
            armed = False
    return ltc.up_level**theta_exp * count


# ---------------------------------------------------------------------------
# batch estimators
# ---------------------------------------------------------------------------

def _batch_flow(ctx: KappaContext, ltc: LocalTimeConfig, batch_index: int,
                b: float | None, stop_level: float | None,
                completion_level: float | None) -> np.ndarray:
    """One window of flows, run until the swallow of b and/or the stop-level
    first passage.

    Per-sample columns: 0 upcrossing count at the terminal time, 1 stop-first
    indicator, 2 completed-excursion count at completion_level.
    """
    kern = _FlowKernel(ctx, ltc.up_level, ltc.dt)
    rng = batch_stream(ltc.seed, batch_index)
    g_tol = G_TOL_REL * b if b is not None else 0.0
    stop_z = None if stop_level is None else (stop_level / kern.sq) ** 2
    comp_z = None if completion_level is None else (completion_level / kern.sq) ** 2

    z = np.zeros(BATCH)
    o = np.zeros(BATCH)
    v = np.full(BATCH, b if b is not None else 0.0)
    armed = np.ones(BATCH, bool)
    count = np.zeros(BATCH, np.int64)
    completions = np.zeros(BATCH, np.int64)
    pending = np.zeros(BATCH, bool)

    idx = np.arange(BATCH)
    out = np.zeros((BATCH, 3))
    iters = 0
    while len(z):
        iters += 1
        if iters > BATCH_ITER_CAP or iters * BATCH > STEP_CAP:
            raise NonTerminationError("flow simulation exceeded its step cap")
        if b is not None:
            x = np.sqrt(z)
            g = np.maximum(v - o + kern.sq * x, 1e-300)
            dt = kern.step_dt(z, g)
        else:
            g = None
            dt = kern.step_dt(z, None)
        zn = kern.transition(rng, z, dt)
        touched = kern.touch_flags(rng, z, zn, dt)
        armed |= touched
        inc = kern.cross_flags(rng, z, zn, dt, kern.level_z) & armed
        count += inc.astype(np.int64)
        armed &= ~inc
        if comp_z is not None:
            comp_cross = kern.cross_flags(rng, z, zn, dt, comp_z)
            completions += (pending & touched).astype(np.int64)
            pending = (pending & ~touched) | comp_cross
        hit_stop = (kern.cross_flags(rng, z, zn, dt, stop_z)
                    if stop_z is not None else np.zeros(len(z), bool))
        if b is not None:
            o_new = o + kern.o_increment(z, zn, dt)
            v_new = v + 2.0 * dt / g
            g_new = v_new - o_new + kern.sq * np.sqrt(zn)
            swallowed = kern.swallow_flags(rng, g, g_new, dt, g_tol)
        else:
            o_new = o
            v_new = v
            swallowed = np.zeros(len(z), bool)
        finished = swallowed | hit_stop
        if finished.any():
            j = idx[finished]
            out[j, 0] = count[finished]
            out[j, 1] = (hit_stop & ~swallowed)[finished].astype(float)
            out[j, 2] = completions[finished]
        keep_mask = ~finished
        if not keep_mask.all():
            keep = np.where(keep_mask)[0]
            idx = idx[keep]
            z, o, v = zn[keep], o_new[keep], v_new[keep]
            armed, count = armed[keep], count[keep]
            completions, pending = completions[keep], pending[keep]
        else:
            z, o, v = zn, o_new, v_new
    return out


def estimate_localtime_expectation(ctx: KappaContext, ltc: LocalTimeConfig,
                                   b: float = 1.0, threads: int | None = None) -> McEstimate:
    """Monte Carlo mean of the local time accumulated up to the swallowing of b,
    started from w = o = 0."""
    _check_ctx(ctx)
    if b <= 0.0:
        raise DomainError("b must be positive")
    theta_exp = ctx.boundary_exponent
    n = ltc.n_samples
    n_batches = (n + BATCH - 1) // BATCH
    rows = run_batches(lambda k: _batch_flow(ctx, ltc, k, b, None, None),
                       n_batches, threads)
    tot = tot2 = 0.0
    for k, r in enumerate(rows):
        take = min(BATCH, n - k * BATCH)
        ell = ltc.up_level**theta_exp * r[:take, 0]
        tot += float(ell.sum())
        tot2 += float((ell * ell).sum())
    return mean_estimate(tot, tot2, n, ltc.seed)


def estimate_localtime_at_tau(ctx: KappaContext, ltc: LocalTimeConfig, eps: float,
                              threads: int | None = None) -> McEstimate:
    """Mean local time at the first passage of O - W to eps (exactly
    eps^(8/k-1) in the continuum -- the normalisation anchor)."""
    _check_ctx(ctx)
    if eps <= ltc.up_level:
        raise DomainError("the stop level should sit above the counting level")
    theta_exp = ctx.boundary_exponent
    n = ltc.n_samples
    n_batches = (n + BATCH - 1) // BATCH
    rows = run_batches(lambda k: _batch_flow(ctx, ltc, k, None, eps, None),
                       n_batches, threads)
    tot = tot2 = 0.0
    for k, r in enumerate(rows):
        take = min(BATCH, n - k * BATCH)
        ell = ltc.up_level**theta_exp * r[:take, 0]
        tot += float(ell.sum())
        tot2 += float((ell * ell).sum())
    return mean_estimate(tot, tot2, n, ltc.seed)


def estimate_excursion_ratio(ctx: KappaContext, y: float, ltc: LocalTimeConfig,
                             threads: int | None = None) -> McEstimate:
    """P[O - W reaches y^(3/4) before y is swallowed] / (y^(1/4))^(8/k-1).

    Converges to the local-time constant as y -> 0 (force point and start at 0).
    """
    _check_ctx(ctx)
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0,1), got {y!r}")
    level = y**0.75
    scale = (y**0.25) ** ctx.boundary_exponent
    n = ltc.n_samples
    n_batches = (n + BATCH - 1) // BATCH
    rows = run_batches(lambda k: _batch_flow(ctx, ltc, k, y, level, None),
                       n_batches, threads)
    tot = tot2 = 0.0
    for k, r in enumerate(rows):
        take = min(BATCH, n - k * BATCH)
        vals = r[:take, 1] / scale
        tot += float(vals.sum())
        tot2 += float((vals * vals).sum())
    return mean_estimate(tot, tot2, n, ltc.seed)


def estimate_wald_pair(ctx: KappaContext, y: float, ltc: LocalTimeConfig,
                       threads: int | None = None) -> tuple[McEstimate, McEstimate]:
    """(completed-excursion count to y^(3/4) before the swallow of y, local time
    at that swallow): the two sides of E[N] = (y^(3/4))^(-(8/k-1)) E[ell]."""
    _check_ctx(ctx)
    level = y**0.75
    n = ltc.n_samples
    n_batches = (n + BATCH - 1) // BATCH
    rows = run_batches(lambda k: _batch_flow(ctx, ltc, k, y, None, level),
                       n_batches, threads)
    ct = ct2 = lt = lt2 = 0.0
    theta_exp = ctx.boundary_exponent
    for k, r in enumerate(rows):
        take = min(BATCH, n - k * BATCH)
        comp = r[:take, 2]
        ell = ltc.up_level**theta_exp * r[:take, 0]
        ct += float(comp.sum())
        ct2 += float((comp * comp).sum())
        lt += float(ell.sum())
        lt2 += float((ell * ell).sum())
    return (mean_estimate(ct, ct2, n, ltc.seed), mean_estimate(lt, lt2, n, ltc.seed))
