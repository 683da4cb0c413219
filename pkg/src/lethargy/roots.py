"""Bracketed root finding for the intermediate-value steps.

Every caller proves its bracket analytically; these helpers only check the
endpoint signs (raising :class:`NoBracket` when the proof is contradicted by
the numbers) and then refine with Brent's method, which never leaves the
bracket.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NoBracket

XTOL = 1e-15
RTOL = 4 * np.finfo(float).eps


def bracket_root(func: Callable[[float], float], a: float, b: float, *, slack: float = 0.0,
                 error=NoBracket) -> float:
    """Root of ``func`` between ``a`` and ``b`` (either order).

    The caller has proved func(a) <= 0 <= func(b). Violations up to ``slack``
    are attributed to rounding: the offending endpoint is then returned as
    the root. Larger violations raise ``error``.
    """
    fa = func(a)
    if fa > slack:
        raise error(f"func({a}) = {fa} > 0 at the lower end of the bracket")
    if fa >= 0:
        return a
    fb = func(b)
    if fb < -slack:
        raise error(f"func({b}) = {fb} < 0 at the upper end of the bracket")
    if fb <= 0:
        return b
    lo, hi = (a, b) if a < b else (b, a)
    return float(brentq(func, lo, hi, xtol=XTOL, rtol=RTOL, maxiter=500))


def expand_upper(func: Callable[[float], float], start: float = 1.0, factor: float = 2.0,
                 max_steps: int = 200) -> float:
    """Smallest ``start * factor**k`` (k >= 0) where ``func`` is non-negative."""
    hi = start
    for _ in range(max_steps):
        if func(hi) >= 0:
            return hi
        hi *= factor
    raise NoBracket(f"no sign change found up to {hi}")


def largest_root(func: Callable[[float], float], lo: float, hi: float, *, points: int = 256,
                 ftol: float = 1e-12) -> float:
    """Largest root of ``func`` on [lo, hi] by a descending grid scan.

    Scans from ``hi`` down for the last grid point where func <= ftol, then
    refines inside the following cell. A grid point within ftol of zero with
    no sign change after it (a touching root or plateau) is returned directly.
    """
    grid = np.linspace(lo, hi, points)
    vals = [func(a) for a in grid]
    if vals[-1] < -ftol:
        raise NoBracket(f"function still negative ({vals[-1]}) at upper end {hi}")
    for i in range(points - 1, -1, -1):
        if vals[i] <= ftol:
            break
    else:
        raise NoBracket(f"function positive ({vals[0]}) at lower end {lo}")
    if i == points - 1 or vals[i] >= -ftol:
        return float(grid[i])
    return float(brentq(func, grid[i], grid[i + 1], xtol=XTOL, rtol=RTOL, maxiter=500))
