#!/usr/bin/env python3
"""Resolution study for the Blasius spectrum.

For each N the two-grid filtered spectrum is computed and the least stable
kept eigenvalue (largest imaginary part), the number of kept eigenvalues and
the fraction inside the concave-profile region are tabulated.
"""

import argparse
import csv
import sys
import time

import numpy as np

from orrsom.eigensolver import two_grid_spectrum
from orrsom.enclosure import essential_ray, region, verify_spectrum
from orrsom.profiles import make_blasius_profile, profile_bounds


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=0.179)
    ap.add_argument("--R", type=float, default=580.0)
    ap.add_argument("--N", type=lambda s: [int(v) for v in s.split(",")], default=[48, 64, 96, 128])
    ap.add_argument("--xmax", type=float, default=100.0)
    ap.add_argument("--scheme", choices=("truncated", "algebraic"), default="truncated")
    args = ap.parse_args()

    p = make_blasius_profile()
    reg = region("thm33", args.a, args.R, profile_bounds(p))
    ray = essential_ray(args.a, args.R, p.c)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["N", "n_kept", "n_inside", "re_top", "im_top", "seconds"])
    for n in args.N:
        t0 = time.perf_counter()
        s = two_grid_spectrum(p, args.a, args.R, n, args.scheme, args.xmax)
        lam = s.kept_eigenvalues
        rep = verify_spectrum(s, reg, ray)
        top = lam[np.argmax(lam.imag)] if lam.size else complex("nan")
        w.writerow([n, lam.size, rep.summary["n_inside"], f"{top.real:.10f}", f"{top.imag:.10f}",
                    f"{time.perf_counter() - t0:.2f}"])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
