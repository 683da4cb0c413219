"""Best-approximation distances, norming functionals and two-sided certificates.

Primal and dual sides are computed by separate routes:

* ``distance`` minimizes ||x - a|| over a in Y (least squares for L2, a
  vertex LP for L1/LINF). Any candidate a gives a valid upper bound.
* ``norming_functional`` maximizes f(x) over functionals vanishing on Y with
  dual norm at most one (closed form for L2, a separate LP otherwise). After
  cleanup any such f gives a valid lower bound f(x) <= rho(x, Y).

A certificate pairs the two; its gap is the duality gap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _lp
from .errors import DimMismatch, PointInsideSubspace
from .space import NormKind, Subspace

SOLVER_TOL = 1e-10
CERT_TOL = 1e-8


def norm_of(p, kind: NormKind) -> float:
    p = np.asarray(p, dtype=np.float64)
    if kind is NormKind.L1:
        return float(np.abs(p).sum())
    if kind is NormKind.L2:
        return float(np.linalg.norm(p))
    return float(np.abs(p).max()) if p.size else 0.0


def dual_norm(coeffs, kind: NormKind) -> float:
    """Dual norm of a functional on (R^D, kind)."""
    return norm_of(coeffs, kind.dual)


@dataclass(frozen=True, eq=False)
class Functional:
    coeffs: np.ndarray
    norm_kind: NormKind
    dual_norm_value: float

    def __call__(self, p) -> float:
        return float(self.coeffs @ np.asarray(p, dtype=np.float64))

    @classmethod
    def of(cls, coeffs, kind: NormKind) -> "Functional":
        c = np.array(coeffs, dtype=np.float64)
        c.flags.writeable = False
        return cls(c, kind, dual_norm(c, kind))


@dataclass(frozen=True, eq=False)
class DistanceCertificate:
    upper: float
    lower: float
    witness: np.ndarray
    functional: Functional
    claimed: float = float("nan")
    tol: float = CERT_TOL
    passed: bool = True

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _check(x, Y: Subspace) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (Y.dim_ambient,):
        raise DimMismatch(f"point of shape {x.shape} against subspace of R^{Y.dim_ambient}")
    return x


def _l2_projection(x: np.ndarray, Q: np.ndarray) -> np.ndarray:
    a = Q @ (Q.T @ x)
    # one reorthogonalization pass keeps the residual orthogonal to working precision
    r = x - a
    return a + Q @ (Q.T @ r)


def distance(x, Y: Subspace, kind: NormKind) -> tuple[float, np.ndarray]:
    """rho(x, Y) and a nearest point of Y."""
    x = _check(x, Y)
    D = Y.dim_ambient
    if Y.is_zero:
        return norm_of(x, kind), np.zeros(D)
    if Y.rank == D:
        return 0.0, x.copy()
    Q = Y.orthonormal
    if kind is NormKind.L2:
        a = _l2_projection(x, Q)
    else:
        c = _lp.primal_coefficients(x, Q, kind.value)
        a = Q @ c
    return norm_of(x - a, kind), a


def rho(x, Y: Subspace, kind: NormKind) -> float:
    return distance(x, Y, kind)[0]


def _clean(f: np.ndarray, Y: Subspace, kind: NormKind) -> np.ndarray:
    """Force exact annihilation of Y and dual norm <= 1."""
    Q = Y.orthonormal
    if Y.rank:
        f = f - Q @ (Q.T @ f)
    n = dual_norm(f, kind)
    if n > 1.0:
        f = f / n
    return f


def _dual_vector(x: np.ndarray, Y: Subspace, kind: NormKind) -> np.ndarray:
    D = Y.dim_ambient
    if Y.rank == D:
        return np.zeros(D)
    if kind is NormKind.L2:
        r = x - _l2_projection(x, Y.orthonormal) if Y.rank else x
        n = np.linalg.norm(r)
        return r / n if n > 0 else np.zeros(D)
    if Y.is_zero:
        if kind is NormKind.L1:
            return np.sign(x)
        f = np.zeros(D)
        i = int(np.argmax(np.abs(x)))
        f[i] = np.sign(x[i])
        return f
    return _lp.dual_functional(x, Y.orthonormal, kind.value)


def norming_functional(x, Y: Subspace, kind: NormKind, tol: float = SOLVER_TOL) -> Functional:
    """f vanishing on Y with dual norm <= 1 and f(x) = rho(x, Y)."""
    x = _check(x, Y)
    f = _clean(_dual_vector(x, Y, kind), Y, kind)
    if f @ x <= tol:
        raise PointInsideSubspace(f"point is within {tol} of the subspace")
    return Functional.of(f, kind)


def certificate(x, Y: Subspace, kind: NormKind) -> DistanceCertificate:
    """Fresh primal/dual bounds on rho(x, Y) without a claimed value."""
    x = _check(x, Y)
    upper, a = distance(x, Y, kind)
    f = _clean(_dual_vector(x, Y, kind), Y, kind)
    lower = max(0.0, float(f @ x))
    return DistanceCertificate(upper=upper, lower=lower, witness=a, functional=Functional.of(f, kind))


def certify_distance(x, Y: Subspace, kind: NormKind, claimed: float, tol: float = CERT_TOL) -> DistanceCertificate:
    """Certify |rho(x, Y) - claimed| <= tol from scratch.

    Passes iff the dual lower bound is >= claimed - tol and the primal upper
    bound is <= claimed + tol. A failure is a verdict, not an exception.
    """
    cert = certificate(x, Y, kind)
    ok = cert.lower >= claimed - tol and cert.upper <= claimed + tol
    return DistanceCertificate(cert.upper, cert.lower, cert.witness, cert.functional, float(claimed), tol, ok)
