"""Prescribed distances to finitely many nested subspaces, with an anchor.

Given Y_1 < ... < Y_n, targets d_1 > ... > d_n >= 0 and z outside Y_n, the
construction returns x with rho(x, Y_k) = d_k for all k and x - lam*z in Y_n.

Levels are fixed from the top down. Before fixing level k the current x is
recentered against Y_{k+1}, so ||x|| = d_{k+1} < d_k bounds rho(x, Y_k) from
below the target; a unit direction y in Y_{k+1} (rho(y, Y_k) = 1) is then
added with the coefficient that lands rho(x + a*y, Y_k) on d_k. Every step
moves x inside Y_{k+1}, which leaves all distances above level k untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distance import CERT_TOL, SOLVER_TOL, DistanceCertificate, certify_distance, distance, norm_of, norming_functional
from .errors import AnchorInsideTop, CertificationFailure, NotStrictlyDecreasing
from .roots import bracket_root
from .space import Chain, NormKind, Subspace, as_point, require_valid


@dataclass(frozen=True, eq=False)
class AnchoredElement:
    x: np.ndarray
    lam: float
    anchor: np.ndarray
    certificates: tuple[DistanceCertificate, ...]
    anchor_residual: float


def unit_direction(outer: Subspace, inner: Subspace, kind: NormKind) -> np.ndarray:
    """First canonical generator of ``outer`` outside ``inner``, scaled so
    its distance to ``inner`` is one."""
    gens = outer.generators_outside(inner)
    if not gens:
        raise ValueError("outer subspace adds nothing to inner")
    g = gens[0]
    return g / distance(g, inner, kind)[0]


def default_anchor(chain: Chain, n: int) -> np.ndarray:
    """First canonical generator of the successor of Y_n outside Y_n."""
    return chain.successor(n).generators_outside(chain.Y(n))[0]


def _band(d: float, tol: float) -> float:
    return tol * max(1.0, d)


def construct_finite(chain: Chain, targets: Sequence[float], anchor, kind: NormKind, *,
                     scale: float | None = None, cert_tol: float = CERT_TOL,
                     recheck: bool = True) -> AnchoredElement:
    """Element with rho(x, Y_k) = targets[k-1] and x - lam*anchor in Y_n.

    ``scale`` overrides lam = d_n / rho(anchor, Y_n); callers whose anchor
    already sits at distance d_n pass 1.0. With d_n = 0 the anchor can only
    enter with lam = 0.
    """
    require_valid(chain)
    d = [float(v) for v in targets]
    n = len(chain)
    if len(d) != n:
        raise ValueError(f"{len(d)} targets for a chain of length {n}")
    if n == 0:
        raise ValueError("empty chain")
    for k in range(n - 1):
        if not d[k] > d[k + 1]:
            raise NotStrictlyDecreasing(f"d_{k + 1} = {d[k]} is not > d_{k + 2} = {d[k + 1]}")
    if d[-1] < 0:
        raise ValueError("targets must be non-negative")
    z = as_point(anchor, chain.ambient_dim)
    top = chain[-1]
    rho_z = distance(z, top, kind)[0]
    if rho_z <= SOLVER_TOL:
        raise AnchorInsideTop(f"anchor is within {rho_z:.3g} of Y_{n}")

    lam = d[-1] / rho_z if scale is None else float(scale)
    x = lam * z

    for k in range(n - 1, 0, -1):
        Yk, Yk1 = chain.Y(k), chain.Y(k + 1)
        x = x - distance(x, Yk1, kind)[1]
        y = unit_direction(Yk1, Yk, kind)
        f = norming_functional(y, Yk, kind)
        sign = 1.0 if f(x) >= 0 else -1.0
        target = d[k - 1]
        base = x

        def gap(a, base=base, y=y, Yk=Yk, target=target):
            return distance(base + a * y, Yk, kind)[0] - target

        a = bracket_root(gap, 0.0, sign * target, slack=1e-12 * max(1.0, target))
        x = base + a * y
        if recheck:
            for m in range(k + 1, n + 1):
                c = certify_distance(x, chain.Y(m), kind, d[m - 1], _band(d[m - 1], cert_tol))
                if not c.passed:
                    raise CertificationFailure(
                        f"level {m} drifted to [{c.lower}, {c.upper}] after fixing level {k}", index=m)

    x = x - distance(x, chain.Y(1), kind)[1]

    certs = []
    for k in range(1, n + 1):
        c = certify_distance(x, chain.Y(k), kind, d[k - 1], _band(d[k - 1], cert_tol))
        if not c.passed:
            raise CertificationFailure(
                f"rho(x, Y_{k}) in [{c.lower}, {c.upper}], target {d[k - 1]}", index=k)
        certs.append(c)
    residual = top.residual(x - lam * z)
    if residual > 1e-8 * max(1.0, norm_of(x, NormKind.L2)):
        raise CertificationFailure(f"anchor residual {residual:.3g} too large")
    x = as_point(x)
    return AnchoredElement(x=x, lam=lam, anchor=z, certificates=tuple(certs), anchor_residual=residual)
