"""Convergence of the four energy routes on circle and trefoil across an N-ladder.

Writes one CSV row per (curve, α, N, method) with the total, the deviation
from the cosine route, and, for the circle, the error against the
one-dimensional reduction.  Pass --no-correction to see the uncorrected
O(h^(3-α)) behaviour of the plain trapezoid sum.
"""

import argparse
import csv
import sys

from ohara.curve import make_named_curve
from ohara.energy import QuadratureSpec, circle_energy_reduced, evaluate
from ohara.kernel import KernelSpec

METHODS = ("direct", "decomp", "pv", "cosine")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--curves", default="circle,trefoil")
    p.add_argument("--alphas", default="2,2.5,2.9")
    p.add_argument("--ladder", default="128,256,512,1024")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--no-correction", action="store_true")
    p.add_argument("-o", "--output", default="-")
    args = p.parse_args()

    quad = QuadratureSpec(m=args.m, correction=not args.no_correction)
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["curve", "alpha", "N", "method", "total", "dev_vs_cosine", "err_vs_circle_oracle"])
    for name in args.curves.split(","):
        for a in map(float, args.alphas.split(",")):
            k = KernelSpec.power(a)
            oracle = circle_energy_reduced(a) if name == "circle" else None
            for n in map(int, args.ladder.split(",")):
                c = make_named_curve(name, N=n)
                totals = {m: evaluate(c, k, m, quad).total for m in METHODS}
                for m in METHODS:
                    dev = abs(totals[m] - totals["cosine"]) / abs(totals["cosine"])
                    err = "" if oracle is None else repr(abs(totals[m] - oracle) / oracle)
                    w.writerow([name, a, n, m, repr(totals[m]), repr(dev), err])
                out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
