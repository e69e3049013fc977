"""Closed-form quantities of the loop-ensemble connection problem.

Houses the kappa-derived constants, the hypergeometric building block
f(x) = F(4/k, 1-4/k, 8/k; x), the two-channel weight Z, the connection
probability H, the aspect-ratio map, the boundary-hitting integral, the
local-time constant with its value function U, and the avoidance function Q.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, NumericError
from .quadrature import adaptive_simpson
from .specialfn import (
    series_2f1_minus_one,
    HypergeometricParams,
    gamma_ratio,
    gauss_2f1,
    gauss_2f1_at_one,
    h1_about_infinity,
)

KAPPA_MIN = 8.0 / 3.0
KAPPA_MAX = 8.0

QUAD_ABS_TOL = 1e-12
BISECT_CAP = 200


class Regime(enum.Enum):
    SIMPLE = "simple"        # kappa in (8/3, 4): simple loops
    FOUR = "four"            # kappa = 4
    NON_SIMPLE = "non_simple"  # kappa in (4, 8): non-simple loops


@dataclass(frozen=True)
class KappaContext:
    """kappa with every derived constant used across the package."""

    kappa: float
    theta: float
    eta: float
    alpha: float
    bessel_dim: float
    boundary_exponent: float
    regime: Regime

    @property
    def simulable(self) -> bool:
        """Whether the stochastic-flow modules cover this kappa (they need (4,8))."""
        return self.regime is Regime.NON_SIMPLE


def make_context(kappa: float) -> KappaContext:
    """Build the constant bundle for kappa in (8/3, 8)."""
    if not (KAPPA_MIN < kappa < KAPPA_MAX):
        raise DomainError(f"kappa must lie in (8/3, 8), got {kappa!r}")
    theta = -2.0 * math.cos(4.0 * math.pi / kappa)
    if kappa < 4.0:
        regime = Regime.SIMPLE
    elif kappa == 4.0:
        regime = Regime.FOUR
    else:
        regime = Regime.NON_SIMPLE
    return KappaContext(
        kappa=kappa,
        theta=theta,
        eta=1.0 / theta,
        alpha=(6.0 - kappa) / (2.0 * kappa),
        bessel_dim=3.0 - 8.0 / kappa,
        boundary_exponent=8.0 / kappa - 1.0,
        regime=regime,
    )


def f_params(ctx: KappaContext) -> HypergeometricParams:
    k = ctx.kappa
    return HypergeometricParams(4.0 / k, 1.0 - 4.0 / k, 8.0 / k)


def f_one(ctx: KappaContext) -> float:
    """f(1) = Gamma(8/k) Gamma(8/k-1) / (Gamma(4/k) Gamma(12/k-1))."""
    k = ctx.kappa
    if k == 4.0:
        return 1.0
    return gamma_ratio([8.0 / k, 8.0 / k - 1.0], [4.0 / k, 12.0 / k - 1.0])


def f_kappa(ctx: KappaContext, x: float) -> float:
    """f(x) = F(4/k, 1-4/k, 8/k; x) on [0, 1], with the closed form at x = 1."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"f_kappa requires x in [0,1], got {x!r}")
    if ctx.kappa == 4.0:
        return 1.0
    if x == 1.0:
        return f_one(ctx)
    return gauss_2f1(f_params(ctx), x)


def eta_gamma_form(ctx: KappaContext) -> float:
    """eta = -Gamma(8/k) Gamma(1-8/k) / (Gamma(4/k) Gamma(1-4/k)).

    Equals 1/theta away from the removable poles at 8/k integer; the context
    itself stores the pole-free trigonometric value.
    """
    k = ctx.kappa
    return -gamma_ratio([8.0 / k, 1.0 - 8.0 / k], [4.0 / k, 1.0 - 4.0 / k])


def theta_identity_residual(ctx: KappaContext) -> float:
    """Residual of f(1) Gamma(2-8/k) Gamma(12/k-1) / (Gamma(1-4/k) Gamma(8/k)) - 1/theta,
    the closing computation of the main theorem (kappa in (4, 8))."""
    k = ctx.kappa
    if ctx.regime is not Regime.NON_SIMPLE:
        raise DomainError("theta identity is stated for kappa in (4, 8)")
    lhs = f_one(ctx) * gamma_ratio([2.0 - 8.0 / k, 12.0 / k - 1.0], [1.0 - 4.0 / k, 8.0 / k])
    return lhs - 1.0 / ctx.theta


def partition_Z(ctx: KappaContext, x: float) -> float:
    """Z(x) = x^(2/k) (1-x)^(1-6/k) f(x) on the open interval (0, 1)."""
    if not 0.0 < x < 1.0:
        raise DomainError("partition_Z is defined on (0,1); use partition_Z_limit at the ends")
    k = ctx.kappa
    return math.pow(x, 2.0 / k) * math.pow(1.0 - x, 1.0 - 6.0 / k) * f_kappa(ctx, x)


def partition_Z_limit(ctx: KappaContext, x: float) -> tuple[str, float | None]:
    """Limit tag at the endpoints: ("zero", 0.0), ("finite", value) or ("diverges", None).

    Z -> 0 at x = 0 for every kappa; at x = 1 the factor (1-x)^(1-6/k)
    diverges iff kappa < 6, tends to f(1) at kappa = 6, and to 0 for kappa > 6.
    """
    if x == 0.0:
        return "zero", 0.0
    if x == 1.0:
        if ctx.kappa < 6.0:
            return "diverges", None
        if ctx.kappa == 6.0:
            return "finite", f_one(ctx)
        return "zero", 0.0
    raise DomainError(f"partition_Z_limit expects x in {{0,1}}, got {x!r}")


@dataclass(frozen=True)
class HookupEvaluation:
    """One evaluation of the connection probability H at cross-ratio x."""

    x: float
    z_x: float
    z_mirror: float
    h: float


def hookup_probability(ctx: KappaContext, x: float) -> HookupEvaluation:
    """H(x) = Z(x) / (Z(x) + theta Z(1-x)).

    Both Z-values are evaluated through the connection-routed hypergeometric,
    so the result stays accurate out to x = 1e-12 and 1 - 1e-12.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"hookup_probability requires x in (0,1), got {x!r}")
    z_x = partition_Z(ctx, x)
    z_m = partition_Z(ctx, 1.0 - x)
    h = z_x / (z_x + ctx.theta * z_m)
    return HookupEvaluation(x=x, z_x=z_x, z_mirror=z_m, h=h)


# ---------------------------------------------------------------------------
# aspect ratio <-> cross-ratio
# ---------------------------------------------------------------------------

def _agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 1e-17 * abs(a):
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def _ellipk(m: float) -> float:
    """Complete elliptic integral K(m) = (pi/2) F(1/2, 1/2, 1; m), parameter m in [0,1)."""
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter must lie in [0,1), got {m!r}")
    return math.pi / (2.0 * _agm(1.0, math.sqrt(1.0 - m)))


def _aspect_of_k(k: float) -> float:
    """Aspect ratio of the rectangle whose wired sides sit at modulus k.

    L = 2 K(k^2) / K(1-k^2) = 2 AGM(1, k) / AGM(1, k'), written so that
    neither modulus is squared away by rounding.
    """
    kc = math.sqrt((1.0 - k) * (1.0 + k))
    return 2.0 * _agm(1.0, k) / _agm(1.0, kc)


def cross_to_aspect(x: float) -> float:
    """Aspect ratio L of the conformal rectangle with cross-ratio x in (0,1)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"cross_to_aspect requires x in (0,1), got {x!r}")
    s = math.sqrt(x)
    k = (1.0 - s) / (1.0 + s)
    return _aspect_of_k(k)


def aspect_to_cross(L: float) -> float:
    """Cross-ratio x in (0,1) for aspect ratio L > 0; strictly decreasing in L.

    Solves for the modulus k by bisection (the map k -> L is strictly
    increasing) and converts via x = (1-k)^2/(1+k)^2.
    """
    if not (L > 0.0 and math.isfinite(L)):
        raise DomainError(f"aspect ratio must be a positive real, got {L!r}")
    lo, hi = 1e-300, 1.0 - 1e-16
    # expand the bracket in k-space via the monotone map
    if not (_aspect_of_k(math.sqrt(lo)) < L if False else True):  # pragma: no cover
        raise NumericError("unreachable")
    a, b = 1e-12, 1.0 - 1e-12
    fa = _aspect_of_k(a) - L
    fb = _aspect_of_k(b) - L
    if fa > 0.0:  # extremely small L: answer pinned at x ~ 1
        return (1.0 - a) ** 2 / (1.0 + a) ** 2
    if fb < 0.0:  # extremely large L: x ~ 0
        return (1.0 - b) ** 2 / (1.0 + b) ** 2
    for _ in range(BISECT_CAP):
        k = 0.5 * (a + b)
        if k <= a or k >= b:
            break  # interval has collapsed to adjacent doubles
        if _aspect_of_k(k) < L:
            a = k
        else:
            b = k
        if b - a <= 4e-16 * max(1.0, b):
            break
    else:
        raise NumericError("aspect_to_cross bisection did not converge")
    k = 0.5 * (a + b)
    return (1.0 - k) ** 2 / (1.0 + k) ** 2


# ---------------------------------------------------------------------------
# model correspondences
# ---------------------------------------------------------------------------

def relate_models(ctx: KappaContext) -> dict:
    """Loop weight N, cluster weight q (kappa in [4,8) only), central charge."""
    k = ctx.kappa
    out = {
        "n_dilute_or_dense": ctx.theta,
        "q": ctx.theta**2 if k >= 4.0 else None,
        "central_charge": (6.0 - k) * (3.0 * k - 8.0) / (2.0 * k),
    }
    return out


# ---------------------------------------------------------------------------
# boundary-hitting probability (kappa in (4, 8))
# ---------------------------------------------------------------------------

def cardy_denominator(ctx: KappaContext) -> float:
    """Closed form of int_0^inf y^(-4/k)(1+y)^(-4/k) dy
    = Gamma(1-4/k) Gamma(8/k-1) / Gamma(4/k)."""
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("the hitting integral needs kappa in (4, 8)")
    return gamma_ratio([1.0 - 4.0 / k, 8.0 / k - 1.0], [4.0 / k])


def cardy_denominator_quadrature(ctx: KappaContext) -> float:
    """Same integral by adaptive quadrature after smoothing substitutions
    (independent cross-check of the Gamma closed form)."""
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("the hitting integral needs kappa in (4, 8)")
    # int_0^1 v^(-4/k)(1-v)^(8/k-2) dv, split at 1/2 and desingularised at each end
    q = 1.0 / (1.0 - 4.0 / k)
    p = 1.0 / (8.0 / k - 1.0)

    def left(w):  # v = w^q
        return q * math.pow(1.0 - w**q, 8.0 / k - 2.0)

    def right(u):  # 1 - v = u^p
        return p * math.pow(1.0 - u**p, -4.0 / k)

    return (adaptive_simpson(left, 0.0, 0.5 ** (1.0 / q), QUAD_ABS_TOL)
            + adaptive_simpson(right, 0.0, 0.5 ** (1.0 / p), QUAD_ABS_TOL))


def cardy_hit_probability(ctx: KappaContext, eps: float) -> float:
    """Probability that the chordal trace from 0 meets [1-eps, 1], kappa in (4,8).

    Equals int over v in (1-eps, 1) of v^(-4/k)(1-v)^(8/k-2) dv divided by
    B(1-4/k, 8/k-1); v is the ratio of the two tracked boundary images.  The
    small-eps behaviour is eps^(8/k-1) Gamma(4/k)/(Gamma(1-4/k) Gamma(8/k)).
    """
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("cardy_hit_probability needs kappa in (4, 8)")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0,1), got {eps!r}")
    denom = cardy_denominator(ctx)
    p = 1.0 / (8.0 / k - 1.0)
    q = 1.0 / (1.0 - 4.0 / k)
    if eps <= 0.5:
        # integrate over 1-v = u^p from 0 to eps^(1/p); smooth integrand
        def right(u):
            return p * math.pow(1.0 - u**p, -4.0 / k)

        num = adaptive_simpson(right, 0.0, math.pow(eps, 1.0 / p), QUAD_ABS_TOL)
    else:
        # complement: integrate over v = w^q from 0 to (1-eps)^(1/q)
        def left(w):
            return q * math.pow(1.0 - w**q, 8.0 / k - 2.0)

        num = denom - adaptive_simpson(left, 0.0, math.pow(1.0 - eps, 1.0 / q), QUAD_ABS_TOL)
    return num / denom


def cardy_hit_asymptote(ctx: KappaContext) -> float:
    """Coefficient of eps^(8/k-1) in the eps -> 0 expansion of the hit probability."""
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("needs kappa in (4, 8)")
    return gamma_ratio([4.0 / k], [1.0 - 4.0 / k, 8.0 / k])


# ---------------------------------------------------------------------------
# local-time constant and its value function
# ---------------------------------------------------------------------------

def localtime_expectation(ctx: KappaContext) -> float:
    """Gamma(4/k) / (Gamma(2-8/k) Gamma(12/k-1)), kappa in (4, 8).

    Internally cross-checked against the equivalent form
    -Gamma(8/k-1) Gamma(4/k) / (Gamma(8/k) Gamma(12/k-1) Gamma(1-8/k)).
    """
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("localtime_expectation needs kappa in (4, 8)")
    main = gamma_ratio([4.0 / k], [2.0 - 8.0 / k, 12.0 / k - 1.0])
    alt = -gamma_ratio([8.0 / k - 1.0, 4.0 / k], [8.0 / k, 12.0 / k - 1.0, 1.0 - 8.0 / k])
    if abs(main - alt) > 1e-10 * abs(main):
        raise NumericError(f"local-time constant forms disagree: {main!r} vs {alt!r}")
    return main


def bessel_value_function_U(ctx: KappaContext, x: float) -> float:
    """U(x) = u1 x^(-4/k) F(4/k, 1, 12/k; 1/x) / F(4/k, 1, 12/k; 1) for x >= 1."""
    k = ctx.kappa
    if not ctx.simulable:
        raise DomainError("bessel_value_function_U needs kappa in (4, 8)")
    if x < 1.0:
        raise DomainError(f"U is defined on [1, inf), got {x!r}")
    u1 = localtime_expectation(ctx)
    params = HypergeometricParams(4.0 / k, 1.0 - 8.0 / k, 4.0 / k)
    norm = gauss_2f1_at_one(HypergeometricParams(4.0 / k, 1.0, 12.0 / k))
    return u1 * h1_about_infinity(params, x) / norm


# ---------------------------------------------------------------------------
# avoidance function Q (kappa in (8/3, 4))
# ---------------------------------------------------------------------------

def avoid_probability_Q(ctx: KappaContext, x: float) -> float:
    """Q(x) = x^(2/k) f(x) / f(1) on (0, 1], kappa in (8/3, 4)."""
    k = ctx.kappa
    if ctx.regime is not Regime.SIMPLE:
        raise DomainError("avoid_probability_Q needs kappa in (8/3, 4)")
    if not 0.0 < x <= 1.0:
        raise DomainError(f"Q requires x in (0,1], got {x!r}")
    return math.pow(x, 2.0 / k) * f_kappa(ctx, x) / f_one(ctx)


def c_event_probability(ctx: KappaContext, eps: float) -> float:
    """1 - Q(1 - eps), evaluated without cancellation.

    Uses the expansion of f about 1: 1 - Q(1-e) is assembled from
    -expm1((2/k) log1p(-e) + log F(4/k,1-4/k,2-8/k; e)) plus the
    (eta/f(1)) e^(8/k-1) branch, so tiny eps keeps full relative accuracy.
    """
    k = ctx.kappa
    if ctx.regime is not Regime.SIMPLE:
        raise DomainError("c_event_probability needs kappa in (8/3, 4)")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0,1), got {eps!r}")
    if eps > 0.5:
        return 1.0 - avoid_probability_Q(ctx, 1.0 - eps)
    s1 = series_2f1_minus_one(
        HypergeometricParams(4.0 / k, 1.0 - 4.0 / k, 2.0 - 8.0 / k), eps)
    f2_reg = gauss_2f1(HypergeometricParams(4.0 / k, 12.0 / k - 1.0, 8.0 / k), eps)
    pref = math.exp((2.0 / k) * math.log1p(-eps))
    head = -math.expm1((2.0 / k) * math.log1p(-eps) + math.log1p(s1))
    tail = (ctx.eta / f_one(ctx)) * pref * math.pow(eps, 8.0 / k - 1.0) * f2_reg
    return head + tail
