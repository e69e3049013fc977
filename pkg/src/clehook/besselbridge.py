"""Bridge functionals of the squared radial process used by the flow simulator.

Two quantities are needed per grid step, both conditional on the step's
endpoints (z0, z1) and width dt:

* the probability that the continuous bridge touches zero inside the step
  (exact: the ratio of the killed and unrestricted transition kernels, which
  reduces to a ratio of modified Bessel functions of orders +-mu), and

* the conditional mean of the integral of 1/sqrt(Z_s) across the step, which
  drives the force-point image.  The trapezoid rule collapses on steps whose
  endpoints sit at the diffusive scale, so those steps read an interpolated
  table of the exact bridge mean

      F(a, b) = E[ int_0^1 Z_s^(-1/2) ds | Z_0 = a, Z_1 = b ],   (dt scaled out)

  built once per dimension by quadrature of the kernel product.  The zero-zero
  corner has the closed form F(0,0) = pi * Gamma((d-1)/2) / (sqrt(2) Gamma(d/2)),
  which the tests pin.
"""

from __future__ import annotations

import math
import threading

import numpy as np

_TABLE_LOCK = threading.Lock()
_TABLES: dict[float, "BridgeTable"] = {}
_TOUCH: dict[float, "ZeroTouch"] = {}

# Steps with min(z0, z1) <= DEEP_RATIO * dt take the table branch.
DEEP_RATIO = 25.0
TABLE_MAX = 640.0
TABLE_NODES = 80


def log_bessel_series(q: np.ndarray, nu: float, kmax: int = 110) -> np.ndarray:
    """log of sum_k q^k / (k! Gamma(k+1+nu)) -- entire part of I_nu(2 sqrt q)."""
    q = np.asarray(q, float)
    out = np.empty_like(q)
    small = q < 400.0
    if small.any():
        qs = np.maximum(q[small], 1e-300)
        lq = np.log(qs)
        lgam = np.array([math.lgamma(k + 1) + math.lgamma(k + 1 + nu) for k in range(kmax)])
        terms = np.multiply.outer(np.arange(kmax, dtype=float), lq) - lgam[:, None]
        mx = terms.max(axis=0)
        out[small] = mx + np.log(np.exp(terms - mx).sum(axis=0))
    big = ~small
    if big.any():
        x = 2.0 * np.sqrt(q[big])
        f = 4.0 * nu * nu
        corr = np.log1p(-(f - 1) / (8 * x) + (f - 1) * (f - 9) / (2 * (8 * x) ** 2)
                        - (f - 1) * (f - 9) * (f - 25) / (6 * (8 * x) ** 3))
        out[big] = x - 0.5 * np.log(2 * math.pi * x) + corr - (nu / 2.0) * np.log(q[big])
    return out


class ZeroTouch:
    """P[bridge touches 0 | endpoints] = 1 - I_mu(w)/I_(-mu)(w), w = sqrt(z0 z1)/dt."""

    def __init__(self, d: float, kmax: int = 44):
        self.mu = 1.0 - d / 2.0
        ks = np.arange(kmax)
        self._cp = 1.0 / np.array([math.gamma(k + 1) * math.gamma(k + 1 + self.mu) for k in ks])
        self._cm = 1.0 / np.array([math.gamma(k + 1) * math.gamma(k + 1 - self.mu) for k in ks])
        self._s2 = 2.0 * math.sin(math.pi * self.mu)
        self._kmax = kmax

    def prob(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, float)
        out = np.zeros_like(w)
        small = w <= 8.0
        if small.any():
            x = w[small] / 2.0
            t = x * x
            tp = np.ones_like(t)
            sp = np.zeros_like(t)
            sm = np.zeros_like(t)
            for k in range(self._kmax):
                sp += self._cp[k] * tp
                sm += self._cm[k] * tp
                tp *= t
            with np.errstate(invalid="ignore"):
                ratio = np.where(x > 0.0, x ** (2 * self.mu) * sp / sm, 0.0)
            out[small] = 1.0 - ratio
        mid = (w > 8.0) & (w <= 30.0)
        if mid.any():
            a = w[mid]
            f = 4.0 * self.mu * self.mu
            t1 = (f - 1) / (8 * a)
            t2 = (f - 1) * (f - 9) / (2 * (8 * a) ** 2)
            t3 = (f - 1) * (f - 9) * (f - 25) / (6 * (8 * a) ** 3)
            out[mid] = self._s2 * np.exp(-2.0 * a) * (1 + t1 + t2 + t3) / (1 - t1 + t2 - t3)
        return np.clip(out, 0.0, 1.0)


def zero_zero_mean(d: float) -> float:
    """Closed form F(0,0) = pi Gamma((d-1)/2) / (sqrt(2) Gamma(d/2))."""
    return math.pi * math.gamma((d - 1) / 2.0) / (math.sqrt(2.0) * math.gamma(d / 2.0))


def _log_kernel(t: float, a: np.ndarray, y: np.ndarray, nu: float) -> np.ndarray:
    """log q_t(a -> y) on the (a, y) grid product; a: (na,), y: (ny,) -> (na, ny)."""
    A = a[:, None]
    Y = y[None, :]
    return (-math.log(2 * t) + nu * (np.log(Y) - math.log(2 * t)) - (A + Y) / (2 * t)
            + log_bessel_series(A * Y / (4 * t * t), nu))


def build_bridge_table(d: float, grid: np.ndarray, n_s: int = 32, n_y: int = 480) -> np.ndarray:
    """F(a, b) on grid x grid by quadrature of the kernel product."""
    nu = d / 2.0 - 1.0
    xt, wt = np.polynomial.legendre.leggauss(n_s)
    tau = 0.5 * (xt + 1.0)
    # s = (1 - cos(pi tau))/2 soaks the inverse-square-root endpoints in s
    s = 0.5 * (1.0 - np.cos(math.pi * tau))
    ws = 0.5 * wt * (math.pi / 2.0) * np.sin(math.pi * tau)
    ymax = 3.0 * max(grid.max(), 1.0) + 80.0
    y = np.concatenate([np.geomspace(1e-10, 1.0, n_y // 2, endpoint=False),
                        np.geomspace(1.0, ymax, n_y - n_y // 2)])
    wy = np.empty_like(y)
    wy[1:-1] = 0.5 * (y[2:] - y[:-2])
    wy[0] = 0.5 * (y[1] - y[0])
    wy[-1] = 0.5 * (y[-1] - y[-2])
    wy = wy / np.sqrt(y)
    g = np.maximum(grid, 1e-12)
    lden = np.empty((len(g), len(g)))
    for i, a in enumerate(g):
        lden[i] = _log_kernel(1.0, np.array([a]), g, nu)[0]
    F = np.zeros((len(g), len(g)))
    for si, wi in zip(s, ws):
        la = _log_kernel(si, g, y, nu)              # (n, ny): q_s(a -> y)
        # q_{1-s}(y -> b): same kernel with the nu-prefactor carrying b, not y
        lb = (-math.log(2 * (1 - si)) + nu * (np.log(g)[:, None] - math.log(2 * (1 - si)))
              - (g[:, None] + y[None, :]) / (2 * (1 - si))
              + log_bessel_series(g[:, None] * y[None, :] / (4 * (1 - si) ** 2), nu))
        M = np.exp(la[:, None, :] + lb[None, :, :] - lden[:, :, None])
        F += wi * (M * wy[None, None, :]).sum(axis=2)
    return F


class BridgeTable:
    """Bilinear interpolation of F on a square sqrt-spaced grid."""

    def __init__(self, d: float, vmax: float = TABLE_MAX, nodes: int = TABLE_NODES):
        self.d = d
        self.u = np.linspace(0.0, math.sqrt(vmax), nodes)
        self.du = self.u[1] - self.u[0]
        self.vmax = vmax
        self.F = build_bridge_table(d, self.u**2)

    def mean_inv_sqrt(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """F(a, b) with clamping at the table edge (entries beyond are tail events)."""
        ua = np.sqrt(np.clip(a, 0.0, self.vmax))
        ub = np.sqrt(np.clip(b, 0.0, self.vmax))
        ia = np.clip((ua / self.du).astype(np.int64), 0, len(self.u) - 2)
        ib = np.clip((ub / self.du).astype(np.int64), 0, len(self.u) - 2)
        ta = ua / self.du - ia
        tb = ub / self.du - ib
        F = self.F
        return ((1 - ta) * (1 - tb) * F[ia, ib] + ta * (1 - tb) * F[ia + 1, ib]
                + (1 - ta) * tb * F[ia, ib + 1] + ta * tb * F[ia + 1, ib + 1])


def bridge_table(d: float) -> BridgeTable:
    with _TABLE_LOCK:
        tab = _TABLES.get(d)
        if tab is None:
            tab = BridgeTable(d)
            _TABLES[d] = tab
        return tab


def zero_touch(d: float) -> ZeroTouch:
    with _TABLE_LOCK:
        zt = _TOUCH.get(d)
        if zt is None:
            zt = ZeroTouch(d)
            _TOUCH[d] = zt
        return zt
