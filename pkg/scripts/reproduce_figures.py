#!/usr/bin/env python3
"""Write the data behind the profile, enclosure and spectrum figures.

Outputs (in --out): the Blasius profile table, ray and region polylines for
every variant, the two-grid filtered spectrum and its verification report.
"""

import argparse
import logging
from pathlib import Path

from orrsom.cli import RunConfig, cmd_enclosure, cmd_profile, cmd_spectrum, cmd_verify

log = logging.getLogger("reproduce_figures")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--a", type=float, default=0.179)
    ap.add_argument("--R", type=float, default=580.0)
    ap.add_argument("--N", type=int, default=128)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    base = dict(a=args.a, R=args.R, N=args.N)
    written = []
    written += cmd_profile(RunConfig(out=str(out / "profile"), **base))
    written += cmd_enclosure(RunConfig(out=str(out / "enclosure_general"),
                                       variant="thm31,cor32-box", **base))
    written += cmd_enclosure(RunConfig(out=str(out / "enclosure_concave"),
                                       variant="thm33,cor32-box-improved", **base))
    written += cmd_spectrum(RunConfig(out=str(out / "spectrum"), **base))
    files, code = cmd_verify(RunConfig(out=str(out / "spectrum"), **base))
    written += files
    for path in written:
        log.info("wrote %s", path)
    log.info("verification %s", "passed" if code == 0 else "FAILED")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
