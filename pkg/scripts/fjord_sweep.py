"""Fit -log Z against extremal length over a sweep of fjord lengths."""

import argparse
import math

from discpot import harness as hs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--width", type=int, default=1)
    ap.add_argument("--lengths", default="5,10,20,40", help="comma separated fjord lengths")
    ap.add_argument("--residual-cap", type=float, default=0.1)
    args = ap.parse_args()

    lengths = [int(x) for x in args.lengths.split(",")]
    spec = hs.CorpusSpec([hs.ConfigSpec("fjord", {"width": args.width, "length": n}) for n in lengths])
    report = hs.run_corpus(spec)
    print(f"{'length':>6} {'EL':>10} {'-log Z':>10}")
    for r in report.records:
        if r.get("error"):
            print(f"{r['params']['length']:>6} error: {r['error']}")
            continue
        v = r["values"]
        print(f"{r['params']['length']:>6} {v['EL']:10.4f} {-math.log(v['Z']):10.4f}")
    try:
        slope, intercept, residual = hs.fit_exponential(report, "fjord", args.residual_cap)
    except hs.FitError as exc:
        print(f"fit failed: {exc}")
        return 1
    print(f"-log Z = {slope:.4f} * EL + {intercept:.4f}   (relative residual {residual:.2e})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
