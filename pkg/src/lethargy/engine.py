"""Exact realization of a deviation sequence on a nested chain.

Each level j gets an element q_j of Y_{j+1} with rho(q_j, Y_j) = 1 and
||q_j|| = u_j slightly above one, together with its norming functional f_j
over Y_j. The point is assembled top-down as sum_j lambda_j q_j: lambda_N is
d_N, and each lower coefficient is pinned by an intermediate-value search on
rho(partial + lambda q_k, Y_k) = d_k over the interval whose sign is dictated
by f_k(partial). Adding multiples of q_k never moves distances at higher
levels because q_k lies in Y_{k+1}.

Indices before the first level where d_n >= tau_n holds, a leading zero
subspace, and a trailing run of zeros are handled by reductions recorded in
a :class:`ReductionPlan`.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .distance import CERT_TOL, SOLVER_TOL, Functional, certify_distance, distance, norm_of, norming_functional
from .errors import BracketFailure, CertificationFailure, HeadTies
from .finite_chain import construct_finite, default_anchor
from .pairs import pair_context, pair_family
from .report import ConstructionReport, certify_rows, exact_band
from .roots import bracket_root
from .space import Chain, DeviationSequence, NormKind, Subspace, as_point, check_tail_condition, require_valid

ACCEPT = 1e-6


@dataclass(frozen=True, eq=False)
class LevelData:
    j: int
    q: np.ndarray
    u: float
    f: Functional
    mu: float


@dataclass(eq=False)
class SweepState:
    k: int
    lambdas: dict[int, float]
    partial: np.ndarray
    norms: dict[int, float] = field(default_factory=dict)
    norm_bounds: dict[int, float] = field(default_factory=dict)

    @property
    def within_norm_bounds(self) -> bool:
        return all(self.norms[k] <= self.norm_bounds[k] + 1e-8 for k in self.norms)


@dataclass(frozen=True)
class ReductionPlan:
    """How a problem splits into an engine range and finite-chain pieces.

    ``route`` is "zero" (x = 0), "finite" (one finite-chain call covers every
    positive index) or "engine" (levels start..top by the sweep, then indices
    1..start-1 fixed on top of it).
    """

    route: str
    N: int
    top: int
    n0: int | None
    start: int
    head: tuple[int, ...]
    shifted: bool
    zero_from: int | None
    tau_top: float

    @property
    def trivial(self) -> bool:
        return self.route == "engine" and self.start == 1 and self.zero_from is None

    def as_dict(self) -> dict:
        out = asdict(self)
        out["head"] = list(self.head)
        out["trivial"] = self.trivial
        return out


def _strict(values) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


def preprocess(chain: Chain, seq: DeviationSequence) -> ReductionPlan:
    require_valid(chain)
    N = len(seq)
    if N == 0:
        raise ValueError("empty deviation sequence")
    if N > len(chain):
        raise ValueError(f"{N} targets for a chain of length {len(chain)}")
    d = seq.values
    zero_from = next((n for n in range(1, N + 1) if d[n - 1] == 0), None)
    top = N if zero_from is None else zero_from - 1
    tau_top = 0.0 if zero_from is not None else seq.tau(N)
    if top == 0:
        return ReductionPlan("zero", N, 0, None, 1, (), False, zero_from, 0.0)

    head_strict = _strict(d[:top])
    if tau_top == 0 and head_strict:
        return ReductionPlan("finite", N, top, None, 1, tuple(range(1, top + 1)), False, zero_from, 0.0)

    n0 = check_tail_condition(seq)
    start, shifted = n0, False
    if start == 1 and chain.Y(1).is_zero:
        start, shifted = 2, True
    if start > top:
        if not head_strict:
            raise HeadTies(f"d_1..d_{top} is not strictly decreasing")
        return ReductionPlan("finite", N, top, n0, 1, tuple(range(1, top + 1)), shifted, zero_from, tau_top)
    head = tuple(range(1, start))
    if head and not _strict(d[:start]):
        raise HeadTies(f"indices 1..{start} must be strictly decreasing to be fixed after the sweep")
    return ReductionPlan("engine", N, top, n0, start, head, shifted, zero_from, tau_top)


def level_elements(chain: Chain, seq: DeviationSequence, kind: NormKind, *, start: int = 1,
                   top: int | None = None, tau: float | None = None, eps: float = 0.0,
                   cert_tol: float = CERT_TOL) -> list[LevelData]:
    """Certified q_j for j = start..top with ||q_j|| = 1 + tau/(2^j d_j)."""
    top = len(seq) if top is None else top
    tau = seq.tau(top) if tau is None else float(tau)
    D = chain.ambient_dim
    Q1 = Subspace.zero(D)
    out = []
    for j in range(start, top + 1):
        dj = seq.d(j)
        if dj <= 0:
            raise ValueError(f"level {j} needs d_{j} > 0, got {dj}")
        Yj, Yn = chain.Y(j), chain.successor(j)
        u = 1.0 + tau / (2.0**j * dj)
        if u > 1.0:
            _, (elem,) = pair_family(Q1, Yj, Yn, [(u, 1.0)], kind, eps)
            q, mu = elem.q, elem.mu
        else:
            q, mu = pair_context(Q1, Yj, Yn, kind, eps).s, 0.0
        for Y, value in ((Q1, u), (Yj, 1.0)):
            c = certify_distance(q, Y, kind, value, cert_tol * max(1.0, value))
            if not c.passed:
                raise CertificationFailure(f"level {j}: distance in [{c.lower}, {c.upper}], expected {value}", index=j)
        f = norming_functional(q, Yj, kind)
        if abs(f(q) - 1.0) > cert_tol or f.dual_norm_value > 1.0 + cert_tol:
            raise CertificationFailure(f"level {j}: norming functional gives {f(q)} with norm {f.dual_norm_value}",
                                       index=j)
        out.append(LevelData(j=j, q=q, u=u, f=f, mu=mu))
    return out


def backward_sweep(levels: list[LevelData], seq: DeviationSequence, chain: Chain, kind: NormKind, *,
                   tau: float = 0.0, recheck: bool = True, cert_tol: float = CERT_TOL) -> SweepState:
    """Fix lambda from the top level down; see the module docstring."""
    if not levels:
        raise ValueError("no levels to sweep")
    top = levels[-1].j
    lambdas = {top: seq.d(top)}
    partial = seq.d(top) * levels[-1].q
    state = SweepState(k=top, lambdas=lambdas, partial=partial)

    def bound(k):
        return sum(seq.d(j) for j in range(k, top + 1)) + tau

    state.norms[top] = norm_of(partial, kind)
    state.norm_bounds[top] = bound(top)

    for level in reversed(levels[:-1]):
        k, dk = level.j, seq.d(level.j)
        Yk = chain.Y(k)
        sign = 1.0 if level.f(partial) >= 0 else -1.0
        base, q = partial, level.q

        def gap(lam, base=base, q=q, Yk=Yk, dk=dk):
            return distance(base + lam * q, Yk, kind)[0] - dk

        lam = bracket_root(gap, 0.0, sign * dk, slack=SOLVER_TOL * max(1.0, dk), error=BracketFailure)
        partial = base + lam * q
        lambdas[k] = lam
        state.norms[k] = norm_of(partial, kind)
        state.norm_bounds[k] = bound(k)
        if recheck:
            for m in range(k + 1, top + 1):
                c = certify_distance(partial, chain.Y(m), kind, seq.d(m), cert_tol * max(1.0, seq.d(m)))
                if not c.passed:
                    raise CertificationFailure(
                        f"level {m} moved to [{c.lower}, {c.upper}] after fixing level {k}", index=m)
        state.k = k
    state.partial = as_point(partial)
    return state


def construct_exact(chain: Chain, seq: DeviationSequence, kind: NormKind, *, accept: float = ACCEPT,
                    eps: float = 0.0, recheck: bool = True) -> tuple[np.ndarray, ConstructionReport]:
    """x with rho(x, Y_n) = d_n for n = 1..len(seq), independently certified.

    The chain may be longer than the sequence; extra subspaces only supply
    room for the top level element.
    """
    plan = preprocess(chain, seq)
    D = chain.ambient_dim
    details: dict = {"levels": [], "lambdas": {}, "norms": {}, "norm_bounds": {}}

    if plan.route == "zero":
        x = np.zeros(D)
    elif plan.route == "finite":
        sub = chain.truncate(plan.top)
        elem = construct_finite(sub, seq.values[:plan.top], default_anchor(chain, plan.top), kind,
                                recheck=recheck)
        x = elem.x
        details["lambdas"] = {plan.top: elem.lam}
    else:
        levels = level_elements(chain, seq, kind, start=plan.start, top=plan.top, tau=plan.tau_top, eps=eps)
        state = backward_sweep(levels, seq, chain, kind, tau=plan.tau_top, recheck=recheck)
        x = state.partial
        if plan.head:
            elem = construct_finite(chain.truncate(plan.start), seq.values[:plan.start], x, kind,
                                    scale=1.0, recheck=recheck)
            x = elem.x
        details.update(levels=levels, lambdas=dict(state.lambdas), norms=dict(state.norms),
                       norm_bounds=dict(state.norm_bounds))

    x = as_point(x, D)
    bands = [exact_band(d, accept) for d in seq.values]
    rows = certify_rows(x, chain, seq.values, bands, kind)
    report = ConstructionReport(point=x, rows=rows, plan=plan.as_dict(), details=details)
    if not report.passed:
        n = report.first_failure
        r = rows[n - 1]
        raise CertificationFailure(f"rho(x, Y_{n}) in [{r.cert_lower}, {r.cert_upper}], target {r.d_n}",
                                   index=n, report=report)
    return x, report


@dataclass
class ConvergenceTable:
    ns: tuple[int, ...]
    points: dict[int, np.ndarray]
    entries: list[dict]
    lipschitz_c: float

    def max_diff_by_min_index(self) -> dict[int, float]:
        """Largest pairwise difference among pairs sharing min(n, m)."""
        out: dict[int, float] = {}
        for e in self.entries:
            m = min(e["n"], e["m"])
            out[m] = max(out.get(m, 0.0), e["diff"])
        return dict(sorted(out.items()))


def convergence_probe(chain: Chain, seq: DeviationSequence, ns, kind: NormKind, *,
                      accept: float = ACCEPT) -> ConvergenceTable:
    """Pairwise ||x_n - x_m|| for truncations of ``seq`` to each n in ``ns``.

    The bound columns are c * tau_m * sum_{k<=m} 2^-k and d_{m-1} with
    m = min(n, m), where c is measured from the level elements the runs share.
    """
    ns = tuple(int(n) for n in ns)
    runs = {}
    for n in dict.fromkeys(ns):
        x, rep = construct_exact(chain, seq.truncate(n), kind, accept=accept)
        runs[n] = (x, {lv.j: lv for lv in rep.details.get("levels", [])})

    c = 1.0
    for a, b in itertools.combinations(runs, 2):
        la, lb = runs[a][1], runs[b][1]
        for j in la.keys() & lb.keys():
            spread = max(la[j].u, lb[j].u) - 1.0
            if spread > 0:
                c = max(c, norm_of(la[j].q - lb[j].q, kind) / spread)

    entries = []
    for n, m in itertools.combinations(ns, 2):
        lo = min(n, m)
        entries.append({
            "n": n,
            "m": m,
            "diff": norm_of(runs[n][0] - runs[m][0], kind),
            "tail_term": c * seq.tau(lo) * sum(2.0**-k for k in range(1, lo + 1)),
            "head_term": seq.d(lo - 1) if lo >= 2 else float("nan"),
        })
    return ConvergenceTable(ns=ns, points={n: r[0] for n, r in runs.items()}, entries=entries, lipschitz_c=c)
