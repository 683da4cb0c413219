"""Command line entry point: run, verify, probe and batch."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import LethargyError
from .harness import batch, emit, exit_code_for, load_config, parse_config, run_config, verify_report


def _summary(doc: dict) -> str:
    lines = [f"{doc['name']} [{doc['mode']}, {doc['norm']}]: {doc['verdict']}"]
    for r in doc["rows"]:
        mark = "ok" if r["pass"] else "FAIL"
        lines.append(f"  n={r['n']:<3d} d={r['d_n']:.6g}  rho in [{r['cert_lower']:.12g}, {r['cert_upper']:.12g}]"
                     f"  ratio={r['ratio']:.6g}  {mark}")
    for f in doc["findings"]:
        lines.append(f"  {f['label']} ({f['norm']}): nu={f['nu']:.6g} required={f['required_norm']:.6g} "
                     f"achieved={f['achieved_norm']:.6g} margin={f['margin']:.6g} feasible={f['feasible']}")
    if doc["convergence"]:
        for e in doc["convergence"]["entries"]:
            lines.append(f"  ||x_{e['n']} - x_{e['m']}|| = {e['diff']:.6g}")
    if doc.get("error"):
        lines.append(f"  {doc['error']}")
    return "\n".join(lines)


def _run(args, force_mode=None) -> int:
    cfg = load_config(args.config)
    if force_mode and cfg.mode != force_mode:
        raw = dict(cfg.raw, mode=force_mode)
        cfg = parse_config(raw)
    if getattr(args, "tol", None) is not None:
        cfg = dataclasses.replace(cfg, tolerances=dataclasses.replace(cfg.tolerances, accept=args.tol))
    doc, code = run_config(cfg)
    out = args.out if args.out is not None else Path(args.config).stem + ".report.json"
    emit(doc, out, args.emit_csv)
    print(_summary(doc))
    return code


def _verify(args) -> int:
    v = verify_report(args.report)
    print(f"{args.report}: {'pass' if v.passed else 'fail'} ({v.checked} certificates, "
          f"max deviation {v.max_deviation:.3g})")
    return 0 if v.passed else 1


def _batch(args) -> int:
    entries, worst = batch(args.dir, args.out_dir)
    for e in entries:
        print(f"{e.config:<40s} {e.mode:<9s} {e.verdict:<6s} exit={e.exit_code} {e.message}")
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lethargy", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario config")
    run.add_argument("config")
    run.add_argument("--emit-csv", metavar="PATH")
    run.add_argument("--tol", type=float, metavar="ACCEPT", help="override the acceptance tolerance")
    run.add_argument("--out", metavar="PATH", help="report path (default: <config stem>.report.json)")
    run.set_defaults(func=_run)

    ver = sub.add_parser("verify", help="replay the certificates stored in a report")
    ver.add_argument("report")
    ver.set_defaults(func=_verify)

    probe = sub.add_parser("probe", help="run the functional probes of a config")
    probe.add_argument("config")
    probe.add_argument("--emit-csv", metavar="PATH")
    probe.add_argument("--out", metavar="PATH")
    probe.set_defaults(func=lambda a: _run(a, force_mode="probe"))

    bat = sub.add_parser("batch", help="run every config in a directory")
    bat.add_argument("dir")
    bat.add_argument("--out-dir", metavar="PATH", help="where reports go (default: <dir>/reports)")
    bat.set_defaults(func=_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LethargyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
