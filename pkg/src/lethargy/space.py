"""Coordinate spaces R^D with L1/L2/LINF norms, subspaces, chains and
deviation sequences.

Points are plain 1-D float64 numpy arrays; use :func:`as_point` to validate.
All container types are frozen and hold read-only arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import (
    DependentBasis,
    DimExceedsAmbient,
    DimMismatch,
    InvalidChain,
    NoAdmissibleStart,
    NonIncreasingDims,
    NotNonIncreasing,
)

PIVOT_TOL = 1e-10
RECURRENCE_TOL = 1e-12


class NormKind(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    LINF = "LINF"

    @property
    def dual(self) -> "NormKind":
        return _DUALS[self]

    @classmethod
    def parse(cls, tag) -> "NormKind":
        if isinstance(tag, cls):
            return tag
        key = str(tag).strip().upper().replace("∞", "INF")
        aliases = {"L1": cls.L1, "L2": cls.L2, "LINF": cls.LINF, "INF": cls.LINF, "MAX": cls.LINF}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm kind {tag!r}") from None


_DUALS = {NormKind.L1: NormKind.LINF, NormKind.L2: NormKind.L2, NormKind.LINF: NormKind.L1}


def as_point(coords, dim: int | None = None) -> np.ndarray:
    p = np.array(coords, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    if dim is not None and p.shape[0] != dim:
        raise DimMismatch(f"point has dimension {p.shape[0]}, expected {dim}")
    p.flags.writeable = False
    return p


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def rref(rows: np.ndarray, tol: float = PIVOT_TOL) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with partial pivoting.

    Rows are scaled to unit max-norm first so ``tol`` acts as a relative pivot
    threshold. Returns the nonzero rows and their pivot columns.
    """
    A = np.array(rows, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] == 0:
        return np.zeros((0, A.shape[-1] if A.ndim == 2 else 0)), []
    scale = np.abs(A).max(axis=1)
    scale[scale == 0] = 1.0
    A /= scale[:, None]
    m, n = A.shape
    pivots: list[int] = []
    r = 0
    for col in range(n):
        if r == m:
            break
        i = r + int(np.argmax(np.abs(A[r:, col])))
        if abs(A[i, col]) <= tol:
            A[r:, col] = 0.0
            continue
        A[[r, i]] = A[[i, r]]
        A[r] /= A[r, col]
        others = np.arange(m) != r
        A[others] -= np.outer(A[others, col], A[r])
        A[others, col] = 0.0
        pivots.append(col)
        r += 1
    return A[:r], pivots


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of linearly independent row vectors in R^D.

    An empty basis is the zero subspace.
    """

    basis: np.ndarray
    dim_ambient: int
    canonical: np.ndarray = field(init=False, repr=False)
    pivots: tuple[int, ...] = field(init=False, repr=False)
    orthonormal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        D = int(self.dim_ambient)
        if D < 1:
            raise ValueError("ambient dimension must be positive")
        B = np.array(self.basis, dtype=np.float64)
        if B.size == 0:
            B = np.zeros((0, D))
        B = B.reshape(-1, D) if B.ndim == 1 else B
        if B.shape[1] != D:
            raise DimMismatch(f"basis vectors have dimension {B.shape[1]}, expected {D}")
        if not np.all(np.isfinite(B)):
            raise ValueError("basis has non-finite entries")
        R, piv = rref(B)
        if len(piv) != B.shape[0]:
            raise DependentBasis(f"{B.shape[0]} basis vectors span only rank {len(piv)}")
        if B.shape[0]:
            Q, _ = np.linalg.qr(B.T)
        else:
            Q = np.zeros((D, 0))
        object.__setattr__(self, "dim_ambient", D)
        object.__setattr__(self, "basis", _frozen(B))
        object.__setattr__(self, "canonical", _frozen(R))
        object.__setattr__(self, "pivots", tuple(piv))
        object.__setattr__(self, "orthonormal", _frozen(Q))

    @classmethod
    def zero(cls, D: int) -> "Subspace":
        return cls(np.zeros((0, D)), D)

    @classmethod
    def full(cls, D: int) -> "Subspace":
        return cls(np.eye(D), D)

    @classmethod
    def coordinate(cls, m: int, D: int) -> "Subspace":
        return cls(np.eye(D)[:m], D)

    @classmethod
    def span(cls, vectors, D: int) -> "Subspace":
        """Subspace spanned by possibly dependent vectors."""
        V = np.array(vectors, dtype=np.float64).reshape(-1, D)
        R, _ = rref(V)
        return cls(R, D)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def is_zero(self) -> bool:
        return self.rank == 0

    def residual(self, p) -> float:
        """Euclidean residual of ``p`` against the span."""
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (self.dim_ambient,):
            raise DimMismatch(f"point of shape {p.shape} in ambient dimension {self.dim_ambient}")
        Q = self.orthonormal
        r = p - Q @ (Q.T @ p)
        return float(np.linalg.norm(r))

    def generators_outside(self, inner: "Subspace") -> list[np.ndarray]:
        """Canonical generators of ``self`` that extend ``inner``, in order.

        Greedy over the canonical rows: a row is kept when it raises the rank
        of the accumulated span. The result completes ``inner`` to ``self``.
        """
        acc = [row for row in inner.canonical]
        out = []
        for row in self.canonical:
            trial = np.array(acc + [row]) if acc else row[None, :]
            if len(rref(trial)[1]) > len(acc):
                acc.append(row)
                out.append(np.array(row))
        return out

    def extended(self, vectors) -> "Subspace":
        V = np.array(vectors, dtype=np.float64).reshape(-1, self.dim_ambient)
        return Subspace.span(np.vstack([self.basis, V]), self.dim_ambient)

    def to_list(self) -> list[list[float]]:
        return self.basis.tolist()


def member(p, s: Subspace, tol: float = 1e-8) -> bool:
    return s.residual(p) <= tol


def contains(outer: Subspace, inner: Subspace, tol: float = 1e-8) -> bool:
    return all(outer.residual(v) <= tol * max(1.0, float(np.abs(v).max())) for v in inner.basis)


@dataclass(frozen=True)
class Chain:
    """Ordered subspaces Y_1, ..., Y_N of R^D (index 0 holds Y_1)."""

    subspaces: tuple[Subspace, ...]
    ambient_dim: int

    def __post_init__(self):
        object.__setattr__(self, "subspaces", tuple(self.subspaces))

    def __len__(self):
        return len(self.subspaces)

    def __getitem__(self, i):
        return self.subspaces[i]

    def __iter__(self):
        return iter(self.subspaces)

    def Y(self, n: int) -> Subspace:
        """1-based access."""
        if not 1 <= n <= len(self):
            raise IndexError(f"chain index {n} outside 1..{len(self)}")
        return self.subspaces[n - 1]

    def successor(self, n: int) -> Subspace:
        """Y_{n+1}, or the whole space past the top of the chain."""
        if n < len(self):
            return self.subspaces[n]
        return Subspace.full(self.ambient_dim)

    def truncate(self, n: int) -> "Chain":
        return Chain(self.subspaces[:n], self.ambient_dim)

    @property
    def ranks(self) -> list[int]:
        return [s.rank for s in self.subspaces]

    def to_list(self) -> list[list[list[float]]]:
        return [s.to_list() for s in self.subspaces]

    @classmethod
    def from_bases(cls, bases, D: int) -> "Chain":
        return cls(tuple(Subspace(np.array(b, dtype=float).reshape(-1, D), D) for b in bases), D)


def coordinate_chain(dims: Sequence[int], D: int) -> Chain:
    """Y_n = span of the first ``dims[n]`` standard basis vectors."""
    dims = [int(m) for m in dims]
    if any(m < 0 for m in dims):
        raise NonIncreasingDims("dims must be non-negative")
    for a, b in zip(dims, dims[1:]):
        if b <= a:
            raise NonIncreasingDims(f"dims not strictly increasing: {a} then {b}")
    if dims and dims[-1] >= D:
        raise DimExceedsAmbient(f"top dimension {dims[-1]} must be < ambient {D}")
    return Chain(tuple(Subspace.coordinate(m, D) for m in dims), D)


@dataclass(frozen=True)
class ChainDiagnostics:
    ok: bool
    pair: tuple[int, int] | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_chain(chain: Chain, tol: float = 1e-8) -> ChainDiagnostics:
    """Check strict rank growth, span nesting and a proper top subspace.

    Finite-dimensional subspaces are closed, so strict inclusion is all the
    closure condition asks for here.
    """
    D = chain.ambient_dim
    for i, s in enumerate(chain, start=1):
        if s.dim_ambient != D:
            return ChainDiagnostics(False, (i, i), f"ambient dimension {s.dim_ambient} != {D}")
    for i in range(1, len(chain)):
        lo, hi = chain[i - 1], chain[i]
        if hi.rank <= lo.rank:
            return ChainDiagnostics(False, (i, i + 1), f"rank: rank {lo.rank} -> {hi.rank} is not strictly increasing")
        if not contains(hi, lo, tol):
            return ChainDiagnostics(False, (i, i + 1), f"nesting: Y_{i} is not contained in Y_{i + 1}")
    if len(chain) and chain[-1].rank >= D:
        n = len(chain)
        return ChainDiagnostics(False, (n, n), f"top: rank {chain[-1].rank} leaves no room in R^{D}")
    return ChainDiagnostics(True)


def require_valid(chain: Chain) -> None:
    diag = validate_chain(chain)
    if not diag:
        raise InvalidChain(f"invalid chain at {diag.pair}: {diag.reason}")


@dataclass(frozen=True)
class DeviationSequence:
    """Targets d_1..d_N with analytic tail sums tau_j = sum_{k>j} d_k.

    ``taus`` describes the infinite continuation, so tau_N is the analytic tail
    beyond the last stored value. Build through the classmethods, which
    evaluate the tails in closed form rather than by truncated summation.
    """

    values: tuple[float, ...]
    taus: tuple[float, ...]
    label: str = "explicit"

    def __post_init__(self):
        d = tuple(float(v) for v in self.values)
        t = tuple(float(v) for v in self.taus)
        object.__setattr__(self, "values", d)
        object.__setattr__(self, "taus", t)
        if len(d) != len(t):
            raise ValueError("values and taus differ in length")
        if not all(math.isfinite(v) and v >= 0 for v in d + t):
            raise ValueError("deviation values and tails must be finite and non-negative")
        for j in range(len(d) - 1):
            if d[j + 1] > d[j]:
                raise NotNonIncreasing(f"d_{j + 2} = {d[j + 1]} exceeds d_{j + 1} = {d[j]}")
            if t[j + 1] > t[j]:
                raise ValueError(f"tail sums increase at index {j + 1}")
            expect = d[j + 1] + t[j + 1]
            if abs(t[j] - expect) > RECURRENCE_TOL * max(1.0, abs(expect)):
                raise ValueError(f"tail recurrence broken at index {j + 1}: {t[j]} vs {expect}")
        if d and d[-1] == 0 and t[-1] != 0:
            raise ValueError("a sequence that reaches zero must have zero tail")

    def __len__(self):
        return len(self.values)

    def d(self, n: int) -> float:
        return self.values[n - 1]

    def tau(self, j: int) -> float:
        return self.taus[j - 1]

    @property
    def tail(self) -> float:
        return self.taus[-1] if self.taus else 0.0

    def truncate(self, n: int) -> "DeviationSequence":
        return DeviationSequence(self.values[:n], self.taus[:n], self.label)

    @property
    def n0(self) -> int | None:
        try:
            return check_tail_condition(self)
        except NoAdmissibleStart:
            return None

    @classmethod
    def geometric(cls, K: float, ratio: float, N: int) -> "DeviationSequence":
        """d_n = K * ratio**n, tau_j = K * ratio**(j+1) / (1 - ratio)."""
        if not (0 < ratio < 1) or K <= 0:
            raise ValueError("geometric sequence needs K > 0 and 0 < ratio < 1")
        d = [K * ratio**n for n in range(1, N + 1)]
        t = [K * ratio ** (j + 1) / (1 - ratio) for j in range(1, N + 1)]
        return cls(tuple(d), tuple(t), f"geometric(K={K}, ratio={ratio})")

    @classmethod
    def power(cls, p: float, N: int, scale: float = 1.0) -> "DeviationSequence":
        """d_n = scale * n**-p with Hurwitz-zeta tails (p > 1)."""
        if p <= 1:
            raise ValueError("power sequence needs p > 1 for a finite tail")
        d = [scale * float(n) ** -p for n in range(1, N + 1)]
        t = [scale * float(special.zeta(p, j + 1)) for j in range(1, N + 1)]
        return cls(tuple(d), tuple(t), f"power(p={p})")

    @classmethod
    def explicit(cls, values: Sequence[float], tail: float = 0.0) -> "DeviationSequence":
        """Stored values followed by a continuation whose sum is ``tail``."""
        d = [float(v) for v in values]
        t = [0.0] * len(d)
        acc = float(tail)
        for j in range(len(d) - 1, -1, -1):
            t[j] = acc
            acc = math.fsum([acc, d[j]])
        return cls(tuple(d), tuple(t), f"explicit(tail={tail})")


def check_tail_condition(seq: DeviationSequence, rel_tol: float = 1e-12) -> int:
    """Smallest n0 >= 1 with d_n >= tau_n for every n0 <= n <= N."""
    d, t = seq.values, seq.taus
    n0 = None
    for n in range(len(d), 0, -1):
        if d[n - 1] >= t[n - 1] - rel_tol * max(d[n - 1], t[n - 1]):
            n0 = n
        else:
            break
    if n0 is None:
        raise NoAdmissibleStart(
            f"d_N = {d[-1] if d else float('nan')} is below its tail {t[-1] if t else float('nan')}"
        )
    return n0
