"""Command-line surface: evaluate formulas, run estimators, emit tables.

Every invocation writes one RunRecord as JSON (sorted keys, floats at 17
significant digits) to standard output and diagnostics to standard error.
Identical argv produce byte-identical standard output, so the measured wall
time is reported on stderr only and the record carries wall_time: null.

Exit codes: 0 success, 1 numeric/resource failure, 2 argument errors.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .bessel import (
    LocalTimeConfig,
    estimate_excursion_ratio,
    estimate_localtime_expectation,
)
from .errors import ClehookError, DomainError
from .hookup import (
    aspect_to_cross,
    avoid_probability_Q,
    c_event_probability,
    cardy_hit_probability,
    cross_to_aspect,
    hookup_probability,
    make_context,
    relate_models,
)
from .lattice import (
    BOUNDARY_CONVENTION,
    FkInstance,
    FplInstance,
    Tileset,
    fk_exact_crossing,
    fk_mc_crossing,
    fpl_enumerate_hookup,
    fpl_rotation_check,
)
from .mc import McEstimate
from .sle import SleHitConfig, estimate_hit_probability


def _fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def emit_json(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{out}"'
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, dict):
        inner = ",".join(f"{emit_json(str(k))}:{emit_json(v)}" for k, v in sorted(obj.items()))
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(emit_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj)!r}")


def result_entry(name: str, value, provenance: str, est: McEstimate | None = None) -> dict:
    entry = {"name": name, "value": value, "provenance": provenance}
    if est is not None:
        entry["n"] = est.n
        entry["std_error"] = est.std_error
        entry["seed"] = est.seed
    return entry


def run_record(command: str, parameters: dict, results: list[dict],
               seed: int | None = None) -> dict:
    return {
        "command": command,
        "parameters": parameters,
        "results": results,
        "seed": seed,
        "version": __version__,
        "wall_time": None,
    }


def _print_record(record: dict, started: float):
    sys.stdout.write(emit_json(record) + "\n")
    sys.stdout.flush()
    print(f"# wall_time: {time.time() - started:.3f}s", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_hookup(args, started):
    ctx = make_context(args.kappa)
    if (args.x is None) == (args.aspect is None):
        raise DomainError("give exactly one of --x or --aspect")
    x = args.x if args.x is not None else aspect_to_cross(args.aspect)
    ev = hookup_probability(ctx, x)
    params = {"kappa": args.kappa, "x": x}
    if args.aspect is not None:
        params["aspect"] = args.aspect
    rec = run_record("hookup", params, [
        result_entry("h", ev.h, "closed-form"),
        result_entry("z_x", ev.z_x, "closed-form"),
        result_entry("z_mirror", ev.z_mirror, "closed-form"),
        result_entry("theta", ctx.theta, "closed-form"),
    ])
    _print_record(rec, started)


def _cmd_hookup_table(args, started):
    ctx = make_context(args.kappa)
    m = args.points
    if m < 2:
        raise DomainError("--points must be at least 2")
    rows = []
    for i in range(m):
        if args.by == "cross":
            x = (i + 1) / (m + 1)
            aspect = cross_to_aspect(x)
        else:
            # log-uniform aspect grid on [1/4, 4]; odd point counts center on 1
            lo, hi = -1.3862943611198906, 1.3862943611198906
            import math

            aspect = math.exp(lo + (hi - lo) * i / (m - 1))
            x = aspect_to_cross(aspect)
        ev = hookup_probability(ctx, x)
        rows.append((x, aspect, ev.z_x, ev.z_mirror, ev.h))
    out = ["x,aspect,Z_x,Z_mirror,H"]
    for row in rows:
        out.append(",".join(format(v, ".17g") for v in row))
    sys.stdout.write("\n".join(out) + "\n")
    sys.stdout.flush()
    print(f"# wall_time: {time.time() - started:.3f}s", file=sys.stderr)


def _cmd_relate(args, started):
    ctx = make_context(args.kappa)
    rel = relate_models(ctx)
    results = [
        result_entry("n_dilute_or_dense", rel["n_dilute_or_dense"], "closed-form"),
        result_entry("central_charge", rel["central_charge"], "closed-form"),
    ]
    if rel["q"] is not None:
        results.insert(1, result_entry("q", rel["q"], "closed-form"))
    _print_record(run_record("relate", {"kappa": args.kappa}, results), started)


def _cmd_cardy(args, started):
    ctx = make_context(args.kappa)
    p = cardy_hit_probability(ctx, args.eps)
    rec = run_record("cardy", {"kappa": args.kappa, "eps": args.eps},
                     [result_entry("hit_probability", p, "closed-form")])
    _print_record(rec, started)


def _cmd_qfun(args, started):
    ctx = make_context(args.kappa)
    q = avoid_probability_Q(ctx, args.x)
    rec = run_record("qfun", {"kappa": args.kappa, "x": args.x}, [
        result_entry("Q", q, "closed-form"),
        result_entry("one_minus_Q", c_event_probability(ctx, 1.0 - args.x)
                     if args.x < 1.0 else 0.0, "closed-form"),
    ])
    _print_record(rec, started)


def _cmd_sle_hit(args, started):
    cfg = SleHitConfig(kappa=args.kappa, eps=args.eps, n_samples=args.samples,
                       seed=args.seed, dt=args.dt)
    est = estimate_hit_probability(cfg)
    exact = cardy_hit_probability(make_context(args.kappa), args.eps)
    rec = run_record("sle hit", {
        "kappa": args.kappa, "eps": args.eps, "samples": args.samples,
        "dt": args.dt, "seed": args.seed,
    }, [
        result_entry("hit_probability", est.mean, "monte-carlo", est),
        result_entry("exact_hit_probability", exact, "closed-form"),
    ], seed=args.seed)
    _print_record(rec, started)


def _cmd_bessel_localtime(args, started):
    ctx = make_context(args.kappa)
    ltc = LocalTimeConfig(up_level=args.uplevel, dt=args.dt, seed=args.seed,
                          n_samples=args.samples)
    est = estimate_localtime_expectation(ctx, ltc)
    from .hookup import localtime_expectation

    rec = run_record("bessel localtime", {
        "kappa": args.kappa, "samples": args.samples, "uplevel": args.uplevel,
        "dt": args.dt, "seed": args.seed,
    }, [
        result_entry("localtime_mean", est.mean, "monte-carlo", est),
        result_entry("exact_constant", localtime_expectation(ctx), "closed-form"),
    ], seed=args.seed)
    _print_record(rec, started)


def _cmd_bessel_excursion(args, started):
    ctx = make_context(args.kappa)
    ltc = LocalTimeConfig(up_level=args.uplevel, dt=args.dt, seed=args.seed,
                          n_samples=args.samples)
    est = estimate_excursion_ratio(ctx, args.y, ltc)
    from .hookup import localtime_expectation

    rec = run_record("bessel excursion", {
        "kappa": args.kappa, "y": args.y, "samples": args.samples,
        "uplevel": args.uplevel, "dt": args.dt, "seed": args.seed,
    }, [
        result_entry("excursion_ratio", est.mean, "monte-carlo", est),
        result_entry("limit_constant", localtime_expectation(ctx), "closed-form"),
    ], seed=args.seed)
    _print_record(rec, started)


def _cmd_lattice_fpl_enum(args, started):
    tileset = Tileset.DILUTE if args.dilute else Tileset.FULLY_PACKED
    inst = FplInstance(n=args.n, tileset=tileset, loop_weight=args.N,
                       length_weight=args.mu)
    res = fpl_enumerate_hookup(inst)
    rec = run_record("lattice fpl-enum", {
        "n": args.n, "N": args.N, "mu": args.mu, "tileset": tileset.value,
        "boundary_convention": BOUNDARY_CONVENTION,
    }, [
        result_entry("hookup_probability", res.probability, "enumeration"),
        result_entry("reference_value", 1.0 / (1.0 + args.N), "closed-form"),
    ])
    _print_record(rec, started)


def _cmd_lattice_fpl_rotcheck(args, started):
    inst = FplInstance(n=args.n, tileset=Tileset.FULLY_PACKED, loop_weight=1.0)
    ok = fpl_rotation_check(inst)
    rec = run_record("lattice fpl-rotcheck", {
        "n": args.n, "boundary_convention": BOUNDARY_CONVENTION,
    }, [result_entry("rotation_bijection", ok, "enumeration")])
    _print_record(rec, started)


def _cmd_lattice_fk_enum(args, started):
    inst = FkInstance(n=args.n, q=args.q, p=args.p)
    res = fk_exact_crossing(inst)
    import math

    rec = run_record("lattice fk-enum", {
        "n": args.n, "q": args.q, "p": inst.bond_probability,
    }, [
        result_entry("crossing_probability", res.probability, "enumeration"),
        result_entry("self_dual_value", 1.0 / (1.0 + math.sqrt(args.q)), "closed-form"),
    ])
    _print_record(rec, started)


def _cmd_lattice_fk_mc(args, started):
    inst = FkInstance(n=args.n, q=args.q, p=args.p)
    est = fk_mc_crossing(inst, sweeps=args.sweeps, burn_in=args.burnin, seed=args.seed)
    import math

    rec = run_record("lattice fk-mc", {
        "n": args.n, "q": args.q, "p": inst.bond_probability,
        "sweeps": args.sweeps, "burnin": args.burnin, "seed": args.seed,
    }, [
        result_entry("crossing_probability", est.mean, "monte-carlo", est),
        result_entry("self_dual_value", 1.0 / (1.0 + math.sqrt(args.q)), "closed-form"),
    ], seed=args.seed)
    _print_record(rec, started)


def _cmd_verify(args, started):
    from .verify import run_verification

    ok = run_verification(quick=args.quick, out=sys.stdout)
    print(f"# wall_time: {time.time() - started:.3f}s", file=sys.stderr)
    if not ok:
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="clehook",
        description="Loop-ensemble connection probabilities: closed forms, "
                    "Monte Carlo estimators, exact lattice checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hookup", help="connection probability H at a cross-ratio or aspect")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--x", type=float)
    p.add_argument("--aspect", type=float)
    p.set_defaults(fn=_cmd_hookup)

    p = sub.add_parser("hookup-table", help="CSV table of H along a grid")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--by", choices=("cross", "aspect"), default="cross")
    p.set_defaults(fn=_cmd_hookup_table)

    p = sub.add_parser("relate", help="lattice-model weights and central charge")
    p.add_argument("--kappa", type=float, required=True)
    p.set_defaults(fn=_cmd_relate)

    p = sub.add_parser("cardy", help="exact boundary-hitting probability")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(fn=_cmd_cardy)

    p = sub.add_parser("qfun", help="avoidance function Q for kappa in (8/3, 4)")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.set_defaults(fn=_cmd_qfun)

    p_sle = sub.add_parser("sle", help="stochastic-flow estimators (hitting)")
    ssub = p_sle.add_subparsers(dest="subcommand", required=True)
    p = ssub.add_parser("hit", help="Monte Carlo boundary-hitting probability")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_sle_hit)

    p_b = sub.add_parser("bessel", help="force-point flow estimators")
    bsub = p_b.add_subparsers(dest="subcommand", required=True)
    p = bsub.add_parser("localtime", help="mean local time at the swallow of 1")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--uplevel", type=float, default=1e-3)
    p.add_argument("--dt", type=float, default=1e-8)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_bessel_localtime)
    p = bsub.add_parser("excursion", help="excursion-before-swallow ratio at y")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--uplevel", type=float, default=1e-3)
    p.add_argument("--dt", type=float, default=1e-8)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_bessel_excursion)

    p_l = sub.add_parser("lattice", help="exact enumeration and chain estimates")
    lsub = p_l.add_subparsers(dest="subcommand", required=True)
    p = lsub.add_parser("fpl-enum", help="loop-model hook-up probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--dilute", action="store_true")
    p.set_defaults(fn=_cmd_lattice_fpl_enum)
    p = lsub.add_parser("fpl-rotcheck", help="rotation-bijection self check")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_lattice_fpl_rotcheck)
    p = lsub.add_parser("fk-enum", help="exact crossing probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--p", type=float, default=None)
    p.set_defaults(fn=_cmd_lattice_fk_enum)
    p = lsub.add_parser("fk-mc", help="heat-bath chain crossing estimate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--burnin", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_lattice_fk_mc)

    p = sub.add_parser("verify", help="run the identity/acceptance suite")
    p.add_argument("--quick", action="store_true",
                   help="smaller Monte Carlo sizes (same standard-error criteria)")
    p.set_defaults(fn=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    started = time.time()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse errors exit 2 already
        return int(exc.code or 0)
    try:
        args.fn(args, started)
    except DomainError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 2
    except ClehookError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
