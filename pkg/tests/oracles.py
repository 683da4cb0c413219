"""Solver-free reference values used to cross-check the distance oracle."""
import itertools

import numpy as np


def vector_norm(p, kind):
    p = np.asarray(p, dtype=float)
    return {"L1": np.abs(p).sum(), "L2": np.sqrt(p @ p), "LINF": np.abs(p).max()}[kind]


def grid_distance(x, basis, kind, points=61, rounds=80, shrink=0.7):
    """min ||x - B^T c|| by a zooming grid over the coefficients c.

    The objective is convex in c, so re-centering a shrinking grid on the
    best node converges to the minimum. A dense grid and a slow shrink keep
    the minimizer inside the box along the narrow kink valleys of the L1 and
    max norms. The starting box comes from ||B^T c|| <= 2 ||x||, which any
    minimizer satisfies.
    """
    x = np.asarray(x, dtype=float)
    B = np.asarray(basis, dtype=float).reshape(-1, x.size)
    if B.shape[0] == 0:
        return vector_norm(x, kind)
    smin = np.linalg.svd(B, compute_uv=False).min()
    radius = 2.0 * np.sqrt(x.size) * np.linalg.norm(x) / smin + 1.0
    axis = np.linspace(-1.0, 1.0, points)
    steps = np.array(list(itertools.product(axis, repeat=B.shape[0])))
    center = np.zeros(B.shape[0])
    best = vector_norm(x, kind)
    for _ in range(rounds):
        C = center + radius * steps
        R = x - C @ B
        vals = {"L1": np.abs(R).sum(1), "L2": np.sqrt((R * R).sum(1)), "LINF": np.abs(R).max(1)}[kind]
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, center = float(vals[i]), C[i]
        radius *= shrink
    return best


def normal_equations_residual(x, basis):
    """Euclidean distance through the normal equations instead of QR."""
    x = np.asarray(x, dtype=float)
    B = np.asarray(basis, dtype=float).reshape(-1, x.size)
    if B.shape[0] == 0:
        return float(np.linalg.norm(x))
    c = np.linalg.solve(B @ B.T, B @ x)
    return float(np.linalg.norm(x - c @ B))
