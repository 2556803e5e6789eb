"""Möbius energy of a trefoil before and after sphere inversions.

Samples inversion centers at random (seeded) and records the relative energy
change against the distance of the center from the curve, so the discrete
tolerance can be read off as a function of inversion conditioning.
"""

import argparse
import csv
import sys

import numpy as np

from ohara.curve import make_named_curve
from ohara.energy import energy_cosine
from ohara.errors import MobiusError
from ohara.kernel import KernelSpec
from ohara.mobius import Inversion, MobiusMap, distance_to_curve, transform_curve


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--curve", default="trefoil")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--box", type=float, default=4.0, help="centers drawn uniformly from [-box, box]^3")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=20240607)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    curve = make_named_curve(args.curve, N=args.n)
    k = KernelSpec.power(2.0)
    before = energy_cosine(curve, k).total
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["cx", "cy", "cz", "distance", "before", "after", "rel_dev", "image_length"])
    for _ in range(args.samples):
        center = rng.uniform(-args.box, args.box, 3)
        try:
            img = transform_curve(MobiusMap((Inversion(center, args.radius),)), curve, args.n)
        except MobiusError as exc:
            print(f"# skipped {center.round(3).tolist()}: {exc}", file=sys.stderr)
            continue
        after = energy_cosine(img, k).total
        w.writerow([*(repr(float(v)) for v in center), repr(distance_to_curve(center, curve)), repr(before), repr(after),
                    repr(abs(after - before) / before), repr(img.length)])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
