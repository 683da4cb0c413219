"""Run every scenario config, write reports and CSVs, and replay each report."""
import argparse
from pathlib import Path

from lethargy.harness import batch, verify_report

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=ROOT / "configs", type=Path)
    ap.add_argument("--out", default=ROOT / "results", type=Path)
    args = ap.parse_args()

    entries, worst = batch(args.configs, args.out)
    for e in entries:
        line = f"{e.config:<44s} {e.mode:<9s} {e.verdict:<6s} exit={e.exit_code}"
        report = args.out / (Path(e.config).stem + ".report.json")
        if report.exists():
            v = verify_report(report)
            line += f"  replay={'ok' if v.passed else 'FAIL'} ({v.checked} checks, max dev {v.max_deviation:.1e})"
        print(line + (f"  {e.message}" if e.message else ""))
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
