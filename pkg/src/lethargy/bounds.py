"""Two-sided bounds for sequences the exact engine cannot take.

An arbitrary positive non-increasing sequence is interleaved with the
geometric values g_i = K b^-i (K = b d_1). A geometric value that matches
some d_n reuses Y_n; every other value gets a fresh subspace squeezed between
the original neighbours, built from coordinates the chain has not used yet.
The geometric sequence meets the tail condition (with equality at b = 2), so
the engine realizes it exactly on the merged chain, and each original Y_n,
sitting between two merged subspaces, inherits a distance between the two
neighbouring geometric values. Scaling by b^2 c turns that into
c d_n <= rho <= b^2 c d_n.

Finitely supported sequences with ties are handled separately by stretching
the head into a strictly decreasing one and calling the finite-chain
construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import construct_exact
from .errors import BaseTooSmall, InsufficientGaps, PreconditionViolation
from .finite_chain import construct_finite, default_anchor
from .report import ConstructionReport, ReportRow, certify_rows
from .space import Chain, DeviationSequence, NormKind, Subspace, contains, require_valid

REUSE_TOL = 1e-12
BAND_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MergedEntry:
    i: int
    g: float
    subspace: Subspace
    reused: int | None  # original index whose subspace is reused
    gap: int | None  # inserted between Y_gap and Y_{gap+1}

    @property
    def rank(self) -> int:
        return self.subspace.rank


@dataclass(frozen=True, eq=False)
class ExtensionPlan:
    K: float
    base: float
    i0: int
    entries: tuple[MergedEntry, ...]
    merged_chain: Chain
    merged_seq: DeviationSequence

    @property
    def inserted(self) -> list[MergedEntry]:
        return [e for e in self.entries if e.reused is None]

    @property
    def reuse_map(self) -> dict[int, int]:
        return {e.i: e.reused for e in self.entries if e.reused is not None}

    def as_dict(self) -> dict:
        return {
            "K": self.K,
            "base": self.base,
            "i0": self.i0,
            "entries": [{"i": e.i, "g": e.g, "rank": e.rank, "reused": e.reused, "gap": e.gap}
                        for e in self.entries],
        }


def _geometric_values(K: float, b: float, floor: float) -> list[float]:
    """K b^-i for i = 1, 2, ... through the first value clearly below ``floor``."""
    out = []
    i = 1
    while True:
        g = K * (1.0 / b) ** i
        out.append(g)
        if g < floor * (1 - REUSE_TOL):
            return out
        i += 1


def plan_extension(chain: Chain, seq: DeviationSequence, b: float = 2.0) -> ExtensionPlan:
    require_valid(chain)
    b = float(b)
    if not b >= 2.0:
        raise BaseTooSmall(f"base {b} < 2: the geometric tail g/(b-1) would exceed g")
    d = seq.values
    N = len(d)
    if N == 0 or d[-1] <= 0:
        raise PreconditionViolation("the sequence must be strictly positive")
    if N > len(chain):
        raise ValueError(f"{N} targets for a chain of length {len(chain)}")
    D = chain.ambient_dim
    K = b * d[0]
    values = _geometric_values(K, b, d[-1])
    M = len(values)
    merged_seq = DeviationSequence.geometric(K, 1.0 / b, M)

    pending: dict[int, list[int]] = {}
    placed: dict[int, tuple[int | None, int | None]] = {}
    for i, g in enumerate(merged_seq.values, start=1):
        hit = next((n for n in range(1, N + 1) if abs(g - d[n - 1]) <= REUSE_TOL * d[n - 1]), None)
        if hit is not None:
            placed[i] = (hit, None)
            continue
        gap = next(n for n in range(1, N + 1) if n == N or d[n - 1] > g > d[n])
        placed[i] = (None, gap)
        pending.setdefault(gap, []).append(i)

    subspaces: dict[int, Subspace] = {}
    for gap, idx in pending.items():
        lower = chain.Y(gap)
        upper = chain.Y(gap + 1) if gap < len(chain) else Subspace.full(D)
        fresh = upper.generators_outside(lower)
        room = len(fresh) - 1
        if gap == len(chain):
            room = D - lower.rank - 1
        if len(idx) > room:
            raise InsufficientGaps(
                f"{len(idx)} geometric values fall between d_{gap} and the next subspace, "
                f"but only {max(room, 0)} intermediate ranks are free")
        for r, i in enumerate(idx, start=1):
            subspaces[i] = lower.extended(fresh[:r])

    entries = []
    for i, g in enumerate(merged_seq.values, start=1):
        reused, gap = placed[i]
        Z = chain.Y(reused) if reused is not None else subspaces[i]
        entries.append(MergedEntry(i=i, g=g, subspace=Z, reused=reused, gap=gap))
    merged_chain = Chain(tuple(e.subspace for e in entries), D)
    require_valid(merged_chain)
    return ExtensionPlan(K=K, base=b, i0=1, entries=tuple(entries), merged_chain=merged_chain,
                         merged_seq=merged_seq)


def order_consistent(plan: ExtensionPlan, chain: Chain, seq: DeviationSequence) -> bool:
    """Larger values sit on smaller subspaces across the merged arrangement."""
    for n, dn in enumerate(seq.values, start=1):
        Y = chain.Y(n)
        for e in plan.entries:
            if e.reused == n:
                continue
            if e.g > dn and not contains(Y, e.subspace):
                return False
            if e.g < dn and not contains(e.subspace, Y):
                return False
    return True


@dataclass(eq=False)
class BoundedResult:
    x: np.ndarray
    c: float
    base: float
    rows: list[ReportRow]
    plan: ExtensionPlan
    inner: ConstructionReport
    unscaled: np.ndarray

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows]


def construct_bounded(chain: Chain, seq: DeviationSequence, c: float, b: float, kind: NormKind, *,
                      tol: float = BAND_TOL, accept: float = 1e-6) -> BoundedResult:
    """x_c with c d_n <= rho(x_c, Y_n) <= b^2 c d_n, certified per index."""
    c = float(c)
    if not 0 < c <= 1:
        raise PreconditionViolation(f"c must lie in (0, 1], got {c}")
    plan = plan_extension(chain, seq, b)
    x, inner = construct_exact(plan.merged_chain, plan.merged_seq, kind, accept=accept)
    scale = plan.base * plan.base * c
    xc = scale * x
    bands = [(c * dn - tol, scale * dn + tol) for dn in seq.values]
    rows = certify_rows(xc, chain, seq.values, bands, kind)
    return BoundedResult(x=xc, c=c, base=plan.base, rows=rows, plan=plan, inner=inner, unscaled=x)


@dataclass(eq=False)
class PerturbedResult:
    x: np.ndarray
    eps: float
    n0: int
    perturbed: tuple[float, ...]
    rows: list[ReportRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def head_perturb(chain: Chain, seq: DeviationSequence, eps: float, kind: NormKind, *,
                 tol: float = 1e-9) -> PerturbedResult:
    """d <= rho(x, Y_n) <= (1 + eps) d for a finitely supported sequence.

    The head is stretched to d'_n = (1 + (n0 - n) eps / n0) d_n, which is
    strictly decreasing even across ties, and realized inside Y_{n0+1}.
    """
    eps = float(eps)
    if not eps > 0:
        raise PreconditionViolation(f"eps must be positive to separate ties, got {eps}")
    require_valid(chain)
    d = seq.values
    if seq.tail != 0:
        raise PreconditionViolation("head perturbation needs a sequence that ends in zeros")
    n0 = max((n for n in range(1, len(d) + 1) if d[n - 1] > 0), default=0)
    D = chain.ambient_dim
    if n0 == 0:
        x = np.zeros(D)
        perturbed: tuple[float, ...] = ()
    else:
        perturbed = tuple((1 + (n0 - n) * eps / n0) * d[n - 1] for n in range(1, n0 + 1))
        x = construct_finite(chain.truncate(n0), perturbed, default_anchor(chain, n0), kind).x
    bands = []
    for n, dn in enumerate(d, start=1):
        bands.append((dn - tol * max(1.0, dn), (1 + eps) * dn + tol * max(1.0, dn)) if n <= n0 else (0.0, 1e-10))
    rows = certify_rows(x, chain, d, bands, kind)
    return PerturbedResult(x=x, eps=eps, n0=n0, perturbed=perturbed, rows=rows)
