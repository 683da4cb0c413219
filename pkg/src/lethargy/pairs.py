"""Elements with two prescribed distances to Q1 < Q2 inside Q3.

The elements are built from two generators: ``s``, the normalized residual of
a pivot z against Q2 (so ||s|| = rho(s, Q2) = 1), and ``t``, a unit
direction of Q2 over Q1. For u > v, q = v*s + mu*t has rho(q, Q2) = v for
every mu (t lies in Q2), and rho(q, Q1) rises continuously from v*rho(s, Q1)
<= v < u at mu = 0 to infinity, so a unique crossing with u exists.

The module also measures the dual-extension lemma: whether a functional with
f|Q = 0, f(x1) = 1, ||f|| = 1/rho(x1, Q) can take a prescribed value at x2.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _lp
from .distance import (
    CERT_TOL,
    SOLVER_TOL,
    DistanceCertificate,
    Functional,
    certify_distance,
    distance,
    norm_of,
    norming_functional,
)
from .errors import CertificationFailure, DegenerateTarget, InvalidChain, NoBracket, PreconditionViolation
from .finite_chain import construct_finite, unit_direction
from .roots import bracket_root, expand_upper, largest_root
from .space import Chain, NormKind, Subspace, as_point, validate_chain


@dataclass(frozen=True, eq=False)
class PairContext:
    Q1: Subspace
    Q2: Subspace
    Q3: Subspace
    z: np.ndarray
    w: np.ndarray
    eps: float
    delta_min: float
    delta_max: float
    delta: float
    s: np.ndarray
    t: np.ndarray
    kind: NormKind
    lipschitz_c: float = 1.0


@dataclass(frozen=True, eq=False)
class LevelElement:
    q: np.ndarray
    u: float
    v: float
    mu: float
    certificates: tuple[DistanceCertificate, DistanceCertificate]


def _triple(Q1: Subspace, Q2: Subspace, Q3: Subspace) -> Chain:
    D = Q3.dim_ambient
    if Q3.rank == D:
        chain = Chain((Q1, Q2), D)
        diag = validate_chain(chain)
    else:
        chain = Chain((Q1, Q2, Q3), D)
        diag = validate_chain(chain)
    if not diag:
        raise InvalidChain(f"Q1 < Q2 < Q3 must be strictly nested: {diag.reason}")
    return Chain((Q1, Q2), D)


def find_pivot(Q1: Subspace, Q2: Subspace, Q3: Subspace, kind: NormKind) -> np.ndarray:
    """z in Q3 with certified rho(z, Q1) = 2 and rho(z, Q2) = 1."""
    chain = _triple(Q1, Q2, Q3)
    anchor = Q3.generators_outside(Q2)[0]
    return construct_finite(chain, (2.0, 1.0), anchor, kind).x


def find_delta(z, w, Q1: Subspace, eps: float, kind: NormKind, *, points: int = 256,
               tol: float = 1e-8) -> tuple[float, float, float]:
    """Bracket [delta_min, delta_max] and the largest root of rho(z - a*w, Q1) = 1 + eps."""
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    rw = distance(w, Q1, kind)[0]
    if rw <= tol:
        raise PreconditionViolation(f"rho(w, Q1) = {rw:.3g} must be positive")
    if abs(norm_of(z - w, kind) - (1 + eps)) > tol:
        raise PreconditionViolation(f"||z - w|| = {norm_of(z - w, kind)} differs from 1 + eps = {1 + eps}")
    level = 1.0 + eps
    delta_min = 1.0 + (level - distance(z - w, Q1, kind)[0]) / rw
    delta_max = (3.0 + eps) / rw

    def h(a):
        return distance(z - a * w, Q1, kind)[0] - level

    if h(delta_min) > tol or h(delta_max) < -tol:
        raise NoBracket(f"h({delta_min}) = {h(delta_min)}, h({delta_max}) = {h(delta_max)}")
    delta = largest_root(h, delta_min, delta_max, points=points, ftol=1e-12 * level)
    return delta_min, delta_max, delta


def _offset(z: np.ndarray, Q2: Subspace, Q1: Subspace, eps: float, kind: NormKind) -> np.ndarray:
    """w in Q2 with ||z - w|| = 1 + eps (rho(z, Q2) = 1 assumed)."""
    w = distance(z, Q2, kind)[1]
    if eps == 0:
        return w
    t = unit_direction(Q2, Q1, kind)
    target = 1.0 + eps

    def g(theta):
        return norm_of(z - w - theta * t, kind) - target

    hi = expand_upper(g, start=1.0)
    theta = bracket_root(g, 0.0, hi)
    return w + theta * t


def pair_context(Q1: Subspace, Q2: Subspace, Q3: Subspace, kind: NormKind, eps: float = 0.0) -> PairContext:
    """Pivot, offset, delta search and generators for one triple."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    z = find_pivot(Q1, Q2, Q3, kind)
    w = _offset(z, Q2, Q1, eps, kind)
    dmin, dmax, delta = find_delta(z, w, Q1, eps, kind)
    rz, a = distance(z, Q2, kind)
    s = (z - a) / rz
    y = Q2.generators_outside(Q1)[0]
    t = (y - distance(y, Q1, kind)[1]) / distance(y, Q1, kind)[0]
    return PairContext(Q1=Q1, Q2=Q2, Q3=Q3, z=as_point(z), w=as_point(w), eps=float(eps),
                       delta_min=dmin, delta_max=dmax, delta=delta, s=as_point(s), t=as_point(t), kind=kind)


def _certify(q, Y, kind, value, tol):
    c = certify_distance(q, Y, kind, value, tol * max(1.0, value))
    if not c.passed:
        raise CertificationFailure(f"distance [{c.lower}, {c.upper}] differs from {value}")
    return c


def two_level_element(ctx: PairContext, u: float, v: float, kind: NormKind | None = None, *,
                      cert_tol: float = CERT_TOL) -> LevelElement:
    """q = v*s + mu*t with rho(q, Q1) = u and rho(q, Q2) = v; mu is the
    smallest non-negative root."""
    kind = ctx.kind if kind is None else kind
    u, v = float(u), float(v)
    if not u > v or v < 0:
        raise DegenerateTarget(f"need u > v >= 0, got u={u}, v={v}")
    s, t = ctx.s, ctx.t

    def h(mu):
        return distance(v * s + mu * t, ctx.Q1, kind)[0] - u

    hi = expand_upper(h, start=max(u, 1e-300))
    mu = bracket_root(h, 0.0, hi)
    q = as_point(v * s + mu * t)
    c1 = _certify(q, ctx.Q1, kind, u, cert_tol)
    c2 = _certify(q, ctx.Q2, kind, v, cert_tol)
    return LevelElement(q=q, u=u, v=v, mu=mu, certificates=(c1, c2))


def pair_family(Q1: Subspace, Q2: Subspace, Q3: Subspace, pairs: Sequence[tuple[float, float]],
                kind: NormKind, eps: float = 0.0) -> tuple[PairContext, list[LevelElement]]:
    """Elements for each (u_m, v_m) plus the measured constant c >= 1 with
    ||q_m - q_n|| <= c (max(u_m, u_n) - min(v_m, v_n))."""
    for u, v in pairs:
        if not u > v:
            raise DegenerateTarget(f"need u > v, got ({u}, {v})")
    ctx = pair_context(Q1, Q2, Q3, kind, eps)
    elems = [two_level_element(ctx, u, v, kind) for u, v in pairs]
    c = 1.0
    for a, b in itertools.combinations(elems, 2):
        spread = max(a.u, b.u) - min(a.v, b.v)
        c = max(c, norm_of(a.q - b.q, kind) / spread)
    return replace(ctx, lipschitz_c=c), elems


@dataclass(frozen=True, eq=False)
class FunctionalProbe:
    x1: np.ndarray
    x2: np.ndarray
    Q: Subspace
    delta: float
    orientation: str
    kind: NormKind
    nu: float
    required_norm: float
    achieved_norm: float
    feasible: bool
    margin: float
    functional: Functional
    certificate: DistanceCertificate
    free_value: float
    nu_interval: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "x1": self.x1.tolist(),
            "x2": self.x2.tolist(),
            "Q": self.Q.to_list(),
            "delta": self.delta,
            "orientation": self.orientation,
            "norm": self.kind.value,
            "nu": self.nu,
            "required_norm": self.required_norm,
            "achieved_norm": self.achieved_norm,
            "margin": self.margin,
            "feasible": self.feasible,
            "functional": self.functional.coeffs.tolist(),
            "cert_lower": self.certificate.lower,
            "cert_upper": self.certificate.upper,
            "free_value": self.free_value,
            "nu_interval": list(self.nu_interval),
        }


def _constraint_rows(Q: Subspace, *vectors) -> np.ndarray:
    return np.vstack([Q.orthonormal.T] + [np.asarray(v, dtype=np.float64)[None, :] for v in vectors])


def _null_space(A: np.ndarray, D: int) -> Subspace:
    _, sv, Vt = np.linalg.svd(A)
    rank = int((sv > 1e-12 * max(1.0, sv[0])).sum())
    return Subspace(Vt[rank:], D)


def _nu_interval(x1, x2, Q: Subspace, kind: NormKind, radius: float) -> tuple[float, float]:
    """Range of f(x2) over minimal-norm functionals with f|Q = 0, f(x1) = 1."""
    if kind is NormKind.L2:
        A = _constraint_rows(Q, x1)
        b = np.r_[np.zeros(Q.rank), 1.0]
        f = np.linalg.lstsq(A, b, rcond=None)[0]
        val = float(f @ x2)
        return val, val
    A = _constraint_rows(Q, x1)
    b = np.r_[np.zeros(Q.rank), 1.0]
    r = radius * (1 + 1e-12)
    lo = _lp.extremal_value(np.asarray(x2, float), A, b, r, kind.dual.value, -1)[0]
    hi = _lp.extremal_value(np.asarray(x2, float), A, b, r, kind.dual.value, +1)[0]
    return lo, hi


def prescribed_functional_probe(x1, x2, Q: Subspace, delta: float, orientation: str, kind: NormKind, *,
                                tol: float = 1e-9, grid: int = 101) -> FunctionalProbe:
    """Minimum dual norm of f with f|Q = 0, f(x1) = 1, f(x2) = nu.

    nu = delta - rho(x2 - delta*x1, Q)/rho(x1, Q) for orientation 'minus' and
    nu = -delta + rho(x2 + delta*x1, Q)/rho(x1, Q) for 'plus'. Infeasibility
    is reported through ``feasible``/``margin``; only broken preconditions
    raise.
    """
    if orientation not in ("minus", "plus"):
        raise PreconditionViolation(f"orientation must be 'minus' or 'plus', got {orientation!r}")
    D = Q.dim_ambient
    x1 = as_point(x1, D)
    x2 = as_point(x2, D)
    delta = float(delta)
    if delta < 0:
        raise PreconditionViolation("delta must be >= 0")
    r1 = distance(x1, Q, kind)[0]
    if r1 <= SOLVER_TOL or distance(x2, Q, kind)[0] <= SOLVER_TOL:
        raise PreconditionViolation("x1 and x2 must lie outside Q")
    if Q.extended(x1).residual(x2) <= 1e-9 * max(1.0, np.linalg.norm(x2)):
        raise PreconditionViolation("x2 lies in span({x1} and Q)")
    sgn = -1.0 if orientation == "minus" else 1.0
    base = distance(x2 + sgn * delta * x1, Q, kind)[0]
    for a in np.linspace(delta, delta + 10.0, grid):
        if base > distance(x2 + sgn * a * x1, Q, kind)[0] + tol:
            raise PreconditionViolation(f"delta = {delta} is not minimal: a = {a} does better")
    nu = delta - base / r1 if orientation == "minus" else -delta + base / r1
    required = 1.0 / r1

    # min ||f||_* over {A f = b} is the dual-norm distance from any particular
    # solution to ker A, certified by the same primal/dual machinery
    A = _constraint_rows(Q, x1, x2)
    b = np.r_[np.zeros(Q.rank), 1.0, nu]
    f0 = np.linalg.lstsq(A, b, rcond=None)[0]
    K = _null_space(A, D)
    achieved, a = distance(f0, K, kind.dual)
    f = f0 - a
    cert = certify_distance(f0, K, kind.dual, achieved, CERT_TOL)
    margin = achieved / required
    free = norming_functional(x1, Q, kind)
    free_value = free(x2) / r1
    interval = _nu_interval(x1, x2, Q, kind, required)
    return FunctionalProbe(
        x1=x1, x2=x2, Q=Q, delta=delta, orientation=orientation, kind=kind, nu=float(nu),
        required_norm=required, achieved_norm=float(achieved), feasible=bool(margin <= 1 + tol),
        margin=float(margin), functional=Functional.of(f, kind), certificate=cert,
        free_value=float(free_value), nu_interval=interval,
    )
