"""Small dense linear programs behind the polyhedral (L1 / LINF) oracles.

The subspace is always passed as an orthonormal column basis ``Q`` (D x r).
HiGHS dual simplex returns basic (vertex) solutions, which is what makes the
recomputed objective values exact to rounding.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import SolverFailure

_OPTIONS = {
    "presolve": False,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


def _solve(c, **kw):
    res = linprog(c, method="highs-ds", options=_OPTIONS, **kw)
    if res.status != 0:
        raise SolverFailure(f"LP failed (status {res.status}): {res.message}")
    return res


def primal_coefficients(x: np.ndarray, Q: np.ndarray, kind: str) -> np.ndarray:
    """argmin_c ||x - Q c|| for kind 'L1' or 'LINF'."""
    D, r = Q.shape
    I = np.eye(D)
    if kind == "L1":
        cost = np.r_[np.zeros(r), np.ones(D)]
        A = np.block([[-Q, -I], [Q, -I]])
        bounds = [(None, None)] * r + [(0, None)] * D
    else:
        cost = np.r_[np.zeros(r), 1.0]
        ones = np.ones((D, 1))
        A = np.block([[-Q, -ones], [Q, -ones]])
        bounds = [(None, None)] * r + [(0, None)]
    res = _solve(cost, A_ub=A, b_ub=np.r_[-x, x], bounds=bounds)
    return np.asarray(res.x[:r])


def dual_functional(x: np.ndarray, Q: np.ndarray, kind: str) -> np.ndarray:
    """argmax f.x over {Q^T f = 0, ||f||_dual <= 1} for primal kind 'L1' or 'LINF'."""
    D, r = Q.shape
    if kind == "L1":
        res = _solve(-x, A_eq=Q.T if r else None, b_eq=np.zeros(r) if r else None, bounds=[(-1, 1)] * D)
        return np.asarray(res.x)
    cost = np.r_[-x, x]
    A_eq = np.hstack([Q.T, -Q.T]) if r else None
    res = _solve(
        cost,
        A_ub=np.ones((1, 2 * D)),
        b_ub=[1.0],
        A_eq=A_eq,
        b_eq=np.zeros(r) if r else None,
        bounds=[(0, None)] * (2 * D),
    )
    return np.asarray(res.x[:D] - res.x[D:])


def extremal_value(objective: np.ndarray, A_eq: np.ndarray, b_eq: np.ndarray, radius: float,
                   dual_kind: str, sense: int) -> tuple[float, np.ndarray]:
    """Extremize objective.f over {A_eq f = b_eq, ||f||_dual_kind <= radius}.

    ``sense`` is +1 to maximize, -1 to minimize. ``dual_kind`` is the norm
    applied to f ('L1' or 'LINF').
    """
    D = objective.shape[0]
    if dual_kind == "LINF":
        res = _solve(-sense * objective, A_eq=A_eq, b_eq=b_eq, bounds=[(-radius, radius)] * D)
        f = np.asarray(res.x)
    else:
        res = _solve(
            np.r_[-sense * objective, sense * objective],
            A_ub=np.ones((1, 2 * D)),
            b_ub=[radius],
            A_eq=np.hstack([A_eq, -A_eq]),
            b_eq=b_eq,
            bounds=[(0, None)] * (2 * D),
        )
        f = np.asarray(res.x[:D] - res.x[D:])
    return float(objective @ f), f
