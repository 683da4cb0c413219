"""Per-index certification rows shared by the constructions and the harness."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .distance import certificate
from .space import Chain, NormKind

CSV_COLUMNS = ("n", "d_n", "rho", "cert_lower", "cert_upper", "ratio", "pass")


@dataclass(frozen=True)
class ReportRow:
    n: int
    d_n: float
    rho: float
    cert_lower: float
    cert_upper: float
    ratio: float
    band_lower: float
    band_upper: float
    passed: bool

    def as_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


@dataclass
class ConstructionReport:
    point: np.ndarray
    rows: list[ReportRow]
    plan: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def first_failure(self) -> int | None:
        return next((r.n for r in self.rows if not r.passed), None)


def exact_band(d: float, accept: float, floor: float = 1e-10) -> tuple[float, float]:
    """|rho - d| <= accept * d, with an absolute floor for d = 0."""
    slack = max(accept * d, floor if d == 0 else 0.0)
    return d - slack, d + slack


def certify_rows(x, chain: Chain, targets: Sequence[float], bands: Sequence[tuple[float, float]],
                 kind: NormKind) -> list[ReportRow]:
    """Fresh certificates of rho(x, Y_n) against the band for each target."""
    rows = []
    for n, (d, (lo, hi)) in enumerate(zip(targets, bands), start=1):
        c = certificate(x, chain.Y(n), kind)
        ratio = c.upper / d if d > 0 else (0.0 if c.upper == 0 else float("inf"))
        rows.append(ReportRow(n=n, d_n=float(d), rho=c.upper, cert_lower=c.lower, cert_upper=c.upper,
                              ratio=ratio, band_lower=float(lo), band_upper=float(hi),
                              passed=bool(c.lower >= lo and c.upper <= hi)))
    return rows
