"""The identity/acceptance suite: every numeric claim the library reproduces,
each checked by at least two independent routes where one exists.

Each criterion is a function returning (ok, detail).  `run_verification`
prints one pass/fail line per criterion; the acceptance tests call the same
functions, so the tolerances live in exactly one place.
"""

from __future__ import annotations

import io
import math
import os
import sys

import numpy as np

from .bessel import (
    LocalTimeConfig,
    estimate_excursion_ratio,
    estimate_localtime_at_tau,
    estimate_localtime_expectation,
)
from .hookup import (
    avoid_probability_Q,
    bessel_value_function_U,
    cardy_hit_probability,
    eta_gamma_form,
    f_one,
    hookup_probability,
    localtime_expectation,
    make_context,
    theta_identity_residual,
)
from .lattice import (
    FkInstance,
    FplInstance,
    Tileset,
    fk_exact_crossing,
    fk_mc_crossing,
    fpl_enumerate_hookup,
    fpl_rotation_check,
)
from .sle import SleHitConfig, estimate_hit_probability
from .specialfn import (
    HypergeometricParams,
    basis_about_one,
    basis_about_one_outside,
    connection_coefficients_infinity,
    connection_coefficients_one,
    gauss_2f1,
    h1_about_infinity,
)

SEED = 20260808


def criterion_closed_form_values(quick: bool = False):
    """H(1/2) at the four reference kappas, each to 1e-12."""
    targets = [
        (6.0, 0.5),
        (4.0, 1.0 / 3.0),
        (16.0 / 3.0, 1.0 / (1.0 + math.sqrt(2.0))),
        (3.0, 0.5),
    ]
    worst = 0.0
    for kappa, want in targets:
        h = hookup_probability(make_context(kappa), 0.5).h
        worst = max(worst, abs(h - want))
    return worst < 1e-12, f"max |H(1/2) - target| = {worst:.3e}"


def criterion_theta_eta_identities(quick: bool = False):
    """Gamma-product identities against the trigonometric constant."""
    worst_theta = 0.0
    for kappa in np.linspace(4.05, 7.95, 50):
        worst_theta = max(worst_theta, abs(theta_identity_residual(make_context(float(kappa)))))
    worst_eta = 0.0
    for kappa in np.linspace(2.7, 3.95, 50):
        ctx = make_context(float(kappa))
        worst_eta = max(worst_eta, abs(eta_gamma_form(ctx) - ctx.eta))
    ok = worst_theta < 1e-10 and worst_eta < 1e-10
    return ok, f"theta residual {worst_theta:.3e}, eta residual {worst_eta:.3e}"


def criterion_small_x_asymptotics(quick: bool = False):
    """x^(1-8/k) H(x) theta f(1) -> 1, probed at x = 1e-6."""
    worst = 0.0
    x = 1e-6
    for kappa in (3.0, 10.0 / 3.0, 5.0, 6.0, 7.0):
        ctx = make_context(kappa)
        h = hookup_probability(ctx, x).h
        val = x ** (1.0 - 8.0 / kappa) * h * ctx.theta * f_one(ctx)
        worst = max(worst, abs(val - 1.0))
    return worst < 1e-4, f"max |x^(1-8/k) H theta f(1) - 1| = {worst:.3e} at x=1e-6"


def criterion_connection_residuals(quick: bool = False):
    """Both connection formulas on 20-point grids at kappa in {3, 5, 6}."""
    worst = 0.0
    for kappa in (3.0, 5.0, 6.0):
        p = HypergeometricParams(4.0 / kappa, 1.0 - 4.0 / kappa, 8.0 / kappa)
        A, B = connection_coefficients_one(p)
        for x in np.linspace(0.04, 0.96, 20):
            lhs = gauss_2f1(p, float(x))
            f1, f2 = basis_about_one(p, float(x))
            worst = max(worst, abs(lhs - (A * f1 + B * f2)))
        pu = HypergeometricParams(4.0 / kappa, 1.0 - 8.0 / kappa, 4.0 / kappa)
        Au, Bu = connection_coefficients_infinity(pu)
        for x in np.linspace(1.05, 1.95, 20):
            lhs = h1_about_infinity(pu, float(x))
            f1, f2t = basis_about_one_outside(pu, float(x))
            worst = max(worst, abs(lhs - (Au * f1 + Bu * f2t)))
    return worst < 1e-9, f"max connection residual = {worst:.3e}"


def _relative_ode_residual(terms):
    total = sum(terms)
    scale = sum(abs(t) for t in terms)
    return abs(total) / max(scale, 1e-300)


def criterion_ode_residuals(quick: bool = False):
    """U and Q satisfy their differential equations (central differences, h=1e-4)."""
    h = 1e-4
    worst = 0.0
    for kappa in (5.0, 6.0):
        ctx = make_context(kappa)
        for x in np.linspace(1.3, 3.1, 10):
            x = float(x)
            um, u0, up = (bessel_value_function_U(ctx, x - h),
                          bessel_value_function_U(ctx, x),
                          bessel_value_function_U(ctx, x + h))
            d1 = (up - um) / (2 * h)
            d2 = (up - 2 * u0 + um) / (h * h)
            r = _relative_ode_residual([
                (1.0 - x) * x * d2,
                (4.0 / kappa + (4.0 / kappa - 2.0) * x) * d1,
                (4.0 / kappa) * (8.0 / kappa - 1.0) * u0,
            ])
            worst = max(worst, r)
    for kappa in (3.0, 3.5):
        ctx = make_context(kappa)
        alpha = ctx.alpha
        for x in np.linspace(0.15, 0.85, 10):
            x = float(x)
            qm, q0, qp = (avoid_probability_Q(ctx, x - h),
                          avoid_probability_Q(ctx, x),
                          avoid_probability_Q(ctx, x + h))
            d1 = (qp - qm) / (2 * h)
            d2 = (qp - 2 * q0 + qm) / (h * h)
            r = _relative_ode_residual([
                (kappa / 2.0) * x * x * (x - 1.0) * d2,
                ((kappa - 2.0) * x - 2.0) * x * d1,
                -2.0 * alpha * (x - 1.0) * q0,
            ])
            worst = max(worst, r)
    return worst < 1e-6, f"max relative ODE residual = {worst:.3e}"


def criterion_sle_hitting(quick: bool = False):
    """Coupled-pair Monte Carlo versus the exact hitting integral."""
    n = 20_000 if quick else 200_000
    details = []
    ok = True
    for kappa, eps in ((6.0, 0.4), (5.0, 0.3)):
        cfg = SleHitConfig(kappa=kappa, eps=eps, n_samples=n, seed=SEED)
        est = estimate_hit_probability(cfg)
        exact = cardy_hit_probability(make_context(kappa), eps)
        dev = (est.mean - exact) / est.std_error
        ok = ok and abs(dev) <= 3.0
        details.append(f"kappa={kappa}: {est.mean:.5f}+-{est.std_error:.5f} vs {exact:.5f} "
                       f"({dev:+.2f} SE)")
    return ok, "; ".join(details)


def criterion_bessel_localtime(quick: bool = False):
    """Local time at the swallow of 1 vs the exact constant, and the
    first-passage normalisation anchor."""
    n1 = 8_192 if quick else 100_000
    ctx = make_context(6.0)
    ltc = LocalTimeConfig(up_level=1e-3, dt=1e-8, seed=SEED, n_samples=n1)
    est = estimate_localtime_expectation(ctx, ltc, b=1.0)
    dev1 = (est.mean - 1.0) / est.std_error
    eps = 1e-3
    ltc2 = LocalTimeConfig(up_level=2.5e-4, dt=6.25e-10, seed=SEED + 1, n_samples=n1)
    est2 = estimate_localtime_at_tau(ctx, ltc2, eps)
    anchor = eps ** ctx.boundary_exponent
    dev2 = (est2.mean - anchor) / est2.std_error
    ok = abs(dev1) <= 3.0 and abs(dev2) <= 3.0
    return ok, (f"E[ell_T1] = {est.mean:.4f}+-{est.std_error:.4f} ({dev1:+.2f} SE of 1); "
                f"E[ell_tau] = {est2.mean:.6f}+-{est2.std_error:.6f} vs {anchor:.6f} "
                f"({dev2:+.2f} SE)")


def criterion_excursion_ratio(quick: bool = False):
    """First-passage-before-swallow ratio: 10% window at y=1e-3 and the
    monotone trend between y=1e-2 and y=1e-4 over five seeds."""
    n = 20_000 if quick else 100_000
    ctx = make_context(6.0)
    const = localtime_expectation(ctx)
    ltc = LocalTimeConfig(up_level=1e-3, dt=1e-8, seed=SEED, n_samples=n)
    est = estimate_excursion_ratio(ctx, 1e-3, ltc)
    ok1 = abs(est.mean - const) <= 0.10 * const
    n_tr = 4_096 if quick else 20_000
    closer = 0
    for s in range(5):
        lt_a = LocalTimeConfig(up_level=1e-4, dt=1e-12, seed=SEED + 10 + s, n_samples=n_tr)
        lt_b = LocalTimeConfig(up_level=1e-3, dt=1e-8, seed=SEED + 20 + s, n_samples=n_tr)
        r_small = estimate_excursion_ratio(ctx, 1e-4, lt_a)
        r_big = estimate_excursion_ratio(ctx, 1e-2, lt_b)
        if abs(r_small.mean - const) <= abs(r_big.mean - const):
            closer += 1
    ok2 = closer >= 3
    return ok1 and ok2, (f"ratio(y=1e-3) = {est.mean:.4f} vs {const:.4f} "
                         f"(|dev| = {abs(est.mean - const) / const:.2%}); "
                         f"closer-at-1e-4 in {closer}/5 seeds")


def criterion_lattice_exact(quick: bool = False):
    """Exact loop-model and bond-model identities, plus the chain estimate."""
    worst = 0.0
    for n in (2, 3):
        for N in (0.5, 1.0, 1.5, 2.0):
            r = fpl_enumerate_hookup(FplInstance(n, Tileset.FULLY_PACKED, N))
            worst = max(worst, abs(r.probability - 1.0 / (1.0 + N)))
    for mu in (0.5, 2.0):
        r = fpl_enumerate_hookup(FplInstance(2, Tileset.DILUTE, 1.5, mu))
        worst = max(worst, abs(r.probability - 0.4))
    rot = all(fpl_rotation_check(FplInstance(n, Tileset.FULLY_PACKED, 1.0))
              for n in (1, 2, 3))
    for n in (1, 2):
        for q in (0.5, 1.0, 2.0, 3.0, 4.0):
            r = fk_exact_crossing(FkInstance(n, q))
            worst = max(worst, abs(r.probability - 1.0 / (1.0 + math.sqrt(q))))
    sweeps = 200 if quick else 600
    est = fk_mc_crossing(FkInstance(8, 2.0), sweeps=sweeps, burn_in=sweeps // 4, seed=SEED)
    target = 1.0 / (1.0 + math.sqrt(2.0))
    dev = (est.mean - target) / est.std_error
    ok = worst < 1e-12 and rot and abs(dev) <= 3.0
    return ok, (f"max enumeration error {worst:.2e}; rotation bijection {rot}; "
                f"chain {est.mean:.4f}+-{est.std_error:.4f} vs {target:.4f} ({dev:+.2f} SE)")


def criterion_cross_consistency(quick: bool = False):
    """Discrete 1/(1+sqrt q) at q = theta^2 equals H(1/2) to 1e-12."""
    worst = 0.0
    for kappa in (16.0 / 3.0, 6.0):
        ctx = make_context(kappa)
        lattice_value = 1.0 / (1.0 + math.sqrt(ctx.theta**2))
        h = hookup_probability(ctx, 0.5).h
        worst = max(worst, abs(lattice_value - h))
    return worst < 1e-12, f"max |lattice - continuum| = {worst:.3e}"


def criterion_determinism(quick: bool = False):
    """Byte-identical CLI output across repeated runs and thread counts."""
    from .cli import main

    def capture(argv, threads=None):
        old_env = os.environ.get("CLEHOOK_THREADS")
        if threads is not None:
            os.environ["CLEHOOK_THREADS"] = str(threads)
        old = sys.stdout
        sys.stdout = io.StringIO()
        try:
            code = main(argv)
            out = sys.stdout.getvalue()
        finally:
            sys.stdout = old
            if threads is not None:
                if old_env is None:
                    os.environ.pop("CLEHOOK_THREADS", None)
                else:
                    os.environ["CLEHOOK_THREADS"] = old_env
        return code, out

    argv_cli = ["hookup", "--kappa", "6", "--x", "0.5"]
    c1, o1 = capture(argv_cli)
    c2, o2 = capture(argv_cli)
    argv_mc = ["sle", "hit", "--kappa", "6", "--eps", "0.4",
               "--samples", "2000", "--seed", "7"]
    c3, o3 = capture(argv_mc, threads=1)
    c4, o4 = capture(argv_mc, threads=4)
    ok = (c1 == c2 == c3 == c4 == 0) and o1 == o2 and o3 == o4
    return ok, ("identical bytes across runs and thread counts"
                if ok else "outputs differed between runs")


CRITERIA = [
    ("1 closed-form values", criterion_closed_form_values),
    ("2 theta/eta identities", criterion_theta_eta_identities),
    ("3 small-x asymptotics", criterion_small_x_asymptotics),
    ("4 connection residuals", criterion_connection_residuals),
    ("5 ODE residuals", criterion_ode_residuals),
    ("6 hitting Monte Carlo", criterion_sle_hitting),
    ("7 local-time Monte Carlo", criterion_bessel_localtime),
    ("8 excursion ratio", criterion_excursion_ratio),
    ("9 lattice exactness", criterion_lattice_exact),
    ("10 cross-consistency", criterion_cross_consistency),
    ("11 determinism", criterion_determinism),
]


def run_verification(quick: bool = False, out=None) -> bool:
    out = out or sys.stdout
    all_ok = True
    for name, fn in CRITERIA:
        ok, detail = fn(quick=quick)
        all_ok = all_ok and ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", file=out)
    print("verification " + ("PASSED" if all_ok else "FAILED"), file=out)
    return all_ok
