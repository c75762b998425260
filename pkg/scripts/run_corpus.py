"""Run a ratio corpus and write report.json / report.csv."""

import argparse
import time

from discpot import harness as hs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", help="corpus spec JSON (default: built-in corpus)")
    ap.add_argument("--out", default="report", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = hs.CorpusSpec.load(args.spec) if args.spec else hs.default_corpus()
    t0 = time.perf_counter()
    report = hs.run_corpus(spec, workers=args.workers)
    json_path, csv_path = report.write(args.out)
    print(f"{len(report.records)} configurations in {time.perf_counter() - t0:.1f} s")
    for name, s in sorted(report.summary.items()):
        print(f"  {name:22s} n={s['count']:4d}  min={s['min']:.4g}  max={s['max']:.4g}")
    print(f"{len(report.failures)} failed checks; wrote {json_path} and {csv_path}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
