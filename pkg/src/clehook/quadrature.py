"""Small adaptive Simpson integrator for smooth integrands on finite intervals.

Endpoint-singular integrands are handled by the callers via smoothing
substitutions, so plain Simpson with interval bisection is enough here.
"""

from __future__ import annotations

from .errors import NumericError

MAX_DEPTH = 60


def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, abs_tol: float = 1e-12) -> float:
    """Integral of f over [a, b] to absolute tolerance abs_tol."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, fa, b, fb, m, fm)

    def rec(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(f, a, fa, m, fm, lm, flm)
        right = _simpson(f, m, fm, b, fb, rm, frm)
        err = left + right - whole
        if abs(err) <= 15.0 * tol or depth >= MAX_DEPTH:
            if depth >= MAX_DEPTH and abs(err) > 15.0 * tol:
                raise NumericError("adaptive Simpson hit maximum depth before tolerance")
            return left + right + err / 15.0
        return (rec(a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1)
                + rec(m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1))

    return rec(a, fa, b, fb, m, fm, whole, abs_tol, 0)
