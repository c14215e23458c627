"""Bracketed scalar root finding for monotone residuals."""

import math

from scipy.optimize import brentq

from .exceptions import BracketError

XTOL = 1e-14
MAXITER = 200


def increasing_root(f, lo, hi, *, max_expand=60, xtol=XTOL, floor=-math.inf):
    """Root of a nondecreasing ``f`` starting from the bracket ``[lo, hi]``.

    The bracket is widened geometrically until ``f(lo) <= 0 <= f(hi)``;
    ``lo`` never drops below ``floor``.
    """
    lo = max(lo, floor)
    flo, fhi = f(lo), f(hi)
    width = max(hi - lo, 1.0)
    for _ in range(max_expand):
        if flo <= 0.0 or lo <= floor:
            break
        hi, fhi = lo, flo
        lo = max(lo - width, floor)
        width *= 2.0
        flo = f(lo)
    width = max(hi - lo, 1.0)
    for _ in range(max_expand):
        if fhi >= 0.0:
            break
        lo, flo = hi, fhi
        hi += width
        width *= 2.0
        fhi = f(hi)
    if not (flo <= 0.0 <= fhi) or math.isnan(flo) or math.isnan(fhi):
        raise BracketError(f"no sign change on [{lo:.6g}, {hi:.6g}]: f={flo:.3g}, {fhi:.3g}")
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * 2.220446049250313e-16, maxiter=MAXITER)
