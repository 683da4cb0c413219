"""Scenario configs, runs, reports and their independent replay."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bounds import construct_bounded, head_perturb
from .distance import certificate, norm_of
from .engine import construct_exact, convergence_probe
from .errors import (
    CertificationFailure,
    ConfigError,
    CrossFieldError,
    InfeasibleInput,
    LethargyError,
    ParseError,
    SchemaError,
    TamperDetected,
)
from .finite_chain import construct_finite, default_anchor
from .pairs import prescribed_functional_probe
from .report import CSV_COLUMNS, certify_rows, exact_band
from .space import Chain, DeviationSequence, NormKind, Subspace, coordinate_chain

REPORT_FORMAT = "lethargy-report/1"
MODES = ("exact", "konyagin", "probe", "finite", "converge")
TAMPER_TOL = 1e-9

_number = {"type": "number"}
_vector = {"type": "array", "items": _number}
_basis = {"type": "array", "items": _vector}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["mode", "norm", "ambient_dim"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "norm": {"type": "string", "pattern": "(?i)^(l1|l2|linf)$"},
        "ambient_dim": {"type": "integer", "minimum": 1},
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "bases": {"type": "array", "items": _basis},
            },
            "oneOf": [{"required": ["dims"]}, {"required": ["bases"]}],
        },
        "sequence": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["geometric", "explicit", "power"]},
                "K": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "length": {"type": "integer", "minimum": 1},
                "values": _vector,
                "tail": {"type": "number", "minimum": 0},
                "p": {"type": "number", "exclusiveMinimum": 1},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": "geometric"}}},
                 "then": {"required": ["K", "ratio", "length"]}},
                {"if": {"properties": {"kind": {"const": "explicit"}}}, "then": {"required": ["values"]}},
                {"if": {"properties": {"kind": {"const": "power"}}}, "then": {"required": ["p", "length"]}},
            ],
        },
        "c": {"type": "number"},
        "base": {"type": "number"},
        "eps": {"type": "number", "minimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in ("solver", "root", "accept")},
        },
        "seed": {"type": "integer"},
        "ns": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "anchor": _vector,
        "probes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x1", "x2", "delta", "orientation"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "x1": _vector,
                    "x2": _vector,
                    "Q": _basis,
                    "delta": {"type": "number", "minimum": 0},
                    "orientation": {"enum": ["minus", "plus"]},
                    "norm": {"type": "string", "pattern": "(?i)^(l1|l2|linf)$"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class Tolerances:
    solver: float = 1e-10
    root: float = 1e-12
    accept: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    mode: str
    norm: NormKind
    ambient_dim: int
    raw: dict
    name: str = "scenario"
    chain: dict | None = None
    sequence: dict | None = None
    c: float | None = None
    base: float = 2.0
    eps: float = 0.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    ns: tuple[int, ...] = ()
    anchor: tuple[float, ...] | None = None
    probes: tuple[dict, ...] = ()

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def build_chain(self) -> Chain:
        D = self.ambient_dim
        if "dims" in self.chain:
            return coordinate_chain(self.chain["dims"], D)
        for i, b in enumerate(self.chain["bases"]):
            if any(len(v) != D for v in b):
                raise SchemaError(f"basis vectors must have length {D}", f"chain.bases[{i}]")
        return Chain.from_bases(self.chain["bases"], D)

    def build_sequence(self) -> DeviationSequence:
        s = self.sequence
        if s["kind"] == "geometric":
            return DeviationSequence.geometric(s["K"], s["ratio"], s["length"])
        if s["kind"] == "power":
            return DeviationSequence.power(s["p"], s["length"], s.get("scale", 1.0))
        return DeviationSequence.explicit(s["values"], s.get("tail", 0.0))


def _schema_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        parts += missing[:1]
    return ".".join(parts)


def parse_config(raw) -> RunConfig:
    """Validate a decoded config and return the typed view."""
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(list(e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise SchemaError(err.message, _schema_path(err))
    mode = raw["mode"]
    if mode != "probe":
        for key in ("chain", "sequence"):
            if key not in raw:
                raise CrossFieldError(f"mode {mode!r} requires {key!r}")
    if mode == "konyagin" and "c" not in raw:
        raise CrossFieldError("mode 'konyagin' requires 'c'")
    if mode == "converge" and "ns" not in raw:
        raise CrossFieldError("mode 'converge' requires 'ns'")
    if mode == "probe" and not raw.get("probes"):
        raise CrossFieldError("mode 'probe' requires a non-empty 'probes' list")
    if "anchor" in raw and len(raw["anchor"]) != raw["ambient_dim"]:
        raise CrossFieldError("anchor length must equal ambient_dim")
    D = raw["ambient_dim"]
    for i, p in enumerate(raw.get("probes", [])):
        for key in ("x1", "x2"):
            if len(p[key]) != D:
                raise CrossFieldError(f"probes[{i}].{key} must have length {D}")
    return RunConfig(
        mode=mode,
        norm=NormKind.parse(raw["norm"]),
        ambient_dim=D,
        raw=raw,
        name=raw.get("name", "scenario"),
        chain=raw.get("chain"),
        sequence=raw.get("sequence"),
        c=raw.get("c"),
        base=float(raw.get("base", 2.0)),
        eps=float(raw.get("eps", 0.0)),
        tolerances=Tolerances(**raw.get("tolerances", {})),
        seed=int(raw.get("seed", 0)),
        ns=tuple(raw.get("ns", ())),
        anchor=tuple(raw["anchor"]) if "anchor" in raw else None,
        probes=tuple(raw.get("probes", ())),
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_config(raw)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return 3
    if isinstance(exc, (InfeasibleInput, ValueError)):
        return 2
    return 1


def _versions() -> dict:
    out = {"lethargy": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy"):
        out[pkg] = metadata.version(pkg)
    return out


def _rows(report_rows) -> list[dict]:
    return [r.as_dict() for r in report_rows]


def _subspace(vectors, D: int) -> Subspace:
    return Subspace.span(vectors, D) if vectors else Subspace.zero(D)


def _run_probes(cfg: RunConfig) -> list[dict]:
    findings = []
    for i, p in enumerate(cfg.probes):
        kind = NormKind.parse(p["norm"]) if "norm" in p else cfg.norm
        Q = _subspace(p.get("Q", []), cfg.ambient_dim)
        probe = prescribed_functional_probe(p["x1"], p["x2"], Q, p["delta"], p["orientation"], kind)
        entry = {"label": p.get("label", f"probe{i + 1}")}
        entry.update(probe.as_dict())
        findings.append(entry)
    return findings


def run_scenario(cfg: RunConfig) -> dict:
    """Run one scenario and return its report document.

    Construction failures that come with a partial report are folded into a
    failing verdict; other errors propagate for the caller to map to an exit
    code.
    """
    started = time.perf_counter()
    kind = cfg.norm
    doc: dict = {
        "format": REPORT_FORMAT,
        "name": cfg.name,
        "mode": cfg.mode,
        "norm": kind.value,
        "ambient_dim": cfg.ambient_dim,
        "config": cfg.raw,
        "chain": None,
        "point": None,
        "rows": [],
        "findings": [],
        "convergence": None,
        "plan": {},
        "error": None,
    }
    verdict = True
    if cfg.mode == "probe":
        doc["findings"] = _run_probes(cfg)
    else:
        chain = cfg.build_chain()
        seq = cfg.build_sequence()
        doc["chain"] = chain.to_list()
        doc["targets"] = list(seq.values)
        doc["tail"] = seq.tail
        accept = cfg.tolerances.accept
        if cfg.mode == "exact":
            try:
                x, rep = construct_exact(chain, seq, kind, accept=accept, eps=cfg.eps)
            except CertificationFailure as exc:
                if exc.report is None:
                    raise
                rep, doc["error"] = exc.report, str(exc)
            doc["point"] = rep.point.tolist()
            doc["rows"] = _rows(rep.rows)
            doc["plan"] = rep.plan
            doc["plan"]["lambdas"] = {str(k): v for k, v in rep.details.get("lambdas", {}).items()}
        elif cfg.mode == "finite":
            N = len(seq)
            anchor = cfg.anchor if cfg.anchor is not None else default_anchor(chain, N)
            elem = construct_finite(chain.truncate(N), seq.values, anchor, kind)
            bands = [exact_band(d, accept) for d in seq.values]
            doc["point"] = elem.x.tolist()
            doc["rows"] = _rows(certify_rows(elem.x, chain, seq.values, bands, kind))
            doc["plan"] = {"lam": elem.lam, "anchor": list(map(float, anchor)),
                           "anchor_residual": elem.anchor_residual}
        elif cfg.mode == "konyagin":
            if seq.tail == 0:
                res = head_perturb(chain, seq, cfg.eps, kind)
                doc["point"] = res.x.tolist()
                doc["rows"] = _rows(res.rows)
                doc["plan"] = {"route": "head_perturb", "eps": res.eps, "n0": res.n0,
                               "perturbed": list(res.perturbed)}
            else:
                res = construct_bounded(chain, seq, cfg.c, cfg.base, kind, tol=accept)
                doc["point"] = res.x.tolist()
                doc["rows"] = _rows(res.rows)
                doc["plan"] = {"route": "bounded", "c": res.c, **res.plan.as_dict()}
        elif cfg.mode == "converge":
            table = convergence_probe(chain, seq, cfg.ns, kind, accept=accept)
            trend = table.max_diff_by_min_index()
            vals = list(trend.values())
            doc["convergence"] = {
                "ns": list(table.ns),
                "points": {str(n): p.tolist() for n, p in table.points.items()},
                "entries": table.entries,
                "max_diff_by_min_index": {str(k): v for k, v in trend.items()},
                "non_increasing": all(b <= a for a, b in zip(vals, vals[1:])),
                "lipschitz_c": table.lipschitz_c,
            }
        verdict = all(r["pass"] for r in doc["rows"])
    doc["verdict"] = "pass" if verdict else "fail"
    doc["metadata"] = {
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "tolerances": {"solver": cfg.tolerances.solver, "root": cfg.tolerances.root,
                       "accept": cfg.tolerances.accept},
        "versions": _versions(),
        "timings": {"run_s": time.perf_counter() - started},
    }
    return doc


@dataclass
class Verification:
    passed: bool
    checked: int
    max_deviation: float


def _load_report(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        return json.loads(Path(source).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def _require(doc: dict, key: str):
    if doc.get(key) is None:
        raise SchemaError("missing from report", key)
    return doc[key]


def verify_report(source, tol: float = TAMPER_TOL) -> Verification:
    """Recompute every stored certificate from the embedded point and chain.

    Raises TamperDetected when a stored value disagrees with the replay;
    otherwise the verdict is recomputed from the stored bands.
    """
    doc = _load_report(source)
    if doc.get("format") != REPORT_FORMAT:
        raise SchemaError(f"unknown report format {doc.get('format')!r}", "format")
    mode = _require(doc, "mode")
    D = int(_require(doc, "ambient_dim"))
    kind = NormKind.parse(_require(doc, "norm"))
    worst = 0.0
    checked = 0

    if mode == "probe":
        for i, f in enumerate(_require(doc, "findings")):
            p = prescribed_functional_probe(f["x1"], f["x2"], _subspace(f["Q"], D), f["delta"], f["orientation"],
                                            NormKind.parse(f["norm"]))
            dev = abs(p.margin - f["margin"])
            if dev > 1e-8 * max(1.0, abs(p.margin)) or p.feasible != f["feasible"]:
                raise TamperDetected(f"findings[{i}]: stored margin {f['margin']} vs replay {p.margin}")
            worst, checked = max(worst, dev), checked + 1
        return Verification(True, checked, worst)

    chain = Chain.from_bases(_require(doc, "chain"), D)
    if mode == "converge":
        conv = _require(doc, "convergence")
        pts = {int(n): np.array(p, dtype=float) for n, p in conv["points"].items()}
        for e in conv["entries"]:
            diff = norm_of(pts[e["n"]] - pts[e["m"]], kind)
            dev = abs(diff - e["diff"])
            if dev > tol * max(1.0, diff):
                raise TamperDetected(f"stored ||x_{e['n']} - x_{e['m']}|| = {e['diff']} vs replay {diff}")
            worst, checked = max(worst, dev), checked + 1
        return Verification(True, checked, worst)

    point = _require(doc, "point")
    if len(point) != D:
        raise SchemaError(f"point has {len(point)} coordinates, expected {D}", "point")
    x = np.array(point, dtype=float)
    ok = True
    for row in _require(doc, "rows"):
        n = int(row["n"])
        c = certificate(x, chain.Y(n), kind)
        dev = abs(c.upper - row["rho"])
        if dev > tol * max(1.0, abs(c.upper)):
            raise TamperDetected(f"row {n}: stored rho {row['rho']!r} vs recomputed {c.upper!r}")
        passed = c.lower >= row["band_lower"] and c.upper <= row["band_upper"]
        if passed != row["pass"]:
            raise TamperDetected(f"row {n}: stored pass={row['pass']} but replay gives {passed}")
        ok &= passed
        worst, checked = max(worst, dev), checked + 1
    if (doc.get("verdict") == "pass") != ok:
        raise TamperDetected(f"stored verdict {doc.get('verdict')!r} disagrees with the rows")
    return Verification(ok, checked, worst)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return format(float(v), ".17g")


def csv_table(doc: dict) -> tuple[tuple[str, ...], list[tuple]]:
    if doc["mode"] == "probe":
        cols = ("label", "norm", "orientation", "delta", "nu", "required_norm", "achieved_norm", "margin",
                "feasible")
        return cols, [tuple(f[c] for c in cols) for f in doc["findings"]]
    if doc["mode"] == "converge":
        cols = ("n", "m", "diff", "tail_term", "head_term")
        return cols, [tuple(e[c] for c in cols) for e in doc["convergence"]["entries"]]
    return CSV_COLUMNS, [tuple(r[c] for c in CSV_COLUMNS) for r in doc["rows"]]


def render_csv(doc: dict) -> str:
    cols, rows = csv_table(doc)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def emit(doc: dict, out=None, csv_path=None) -> None:
    if out is not None:
        Path(out).write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")
    if csv_path is not None:
        Path(csv_path).write_text(render_csv(doc))


@dataclass
class BatchEntry:
    config: str
    mode: str
    verdict: str
    exit_code: int
    message: str = ""


def run_config(cfg: RunConfig) -> tuple[dict, int]:
    doc = run_scenario(cfg)
    return doc, 0 if doc["verdict"] == "pass" else 1


def batch(directory, out_dir=None) -> tuple[list[BatchEntry], int]:
    """Run every ``*.json`` config in ``directory``; failures never stop the batch."""
    directory = Path(directory)
    out_dir = Path(out_dir) if out_dir is not None else directory / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for path in sorted(directory.glob("*.json")):
        mode = "?"
        try:
            cfg = load_config(path)
            mode = cfg.mode
            doc, code = run_config(cfg)
            emit(doc, out_dir / f"{path.stem}.report.json", out_dir / f"{path.stem}.csv")
            entries.append(BatchEntry(path.name, mode, doc["verdict"], code))
        except (LethargyError, ValueError) as exc:
            code = exit_code_for(exc)
            entries.append(BatchEntry(path.name, mode, "error", code, f"{type(exc).__name__}: {exc}"))
    worst = max((e.exit_code for e in entries), default=0)
    return entries, worst
