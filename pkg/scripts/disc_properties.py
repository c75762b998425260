"""Sector-hitting and occupation ratios on lattice discs of growing radius."""

import argparse
import math

import numpy as np

from discpot import montecarlo as mc
from discpot.graph_core import lattice_graph


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radii", default="2,4,8,16,32,64")
    ap.add_argument("--amplitude", type=float, default=0.0, help="vertex jitter; 0 gives the square lattice")
    ap.add_argument("--weight-jitter", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sector", type=float, default=math.pi / 2, help="sector opening in radians")
    args = ap.parse_args()

    radii = [int(x) for x in args.radii.split(",")]
    span = range(-max(radii) - 2, max(radii) + 3)
    g, ids = lattice_graph(span, span, amplitude=args.amplitude, weight_jitter=args.weight_jitter,
                           rng=np.random.default_rng(args.seed))
    c = ids[(0, 0)]
    print(f"{'r':>4} {'min sector':>11} {'occupation':>11} {'harnack':>9}")
    occ = []
    for r in radii:
        s = mc.property_S_min(g, c, r, args.sector)
        t = mc.test_property_T(g, c, r)
        h = mc.test_harnack(g, c, r / 2, 2.0) if r >= 2 else math.nan
        occ.append(t)
        print(f"{r:>4} {s:11.4f} {t:11.4f} {h:9.4f}")
    print(f"occupation max/min = {max(occ) / min(occ):.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
