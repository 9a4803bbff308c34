#!/usr/bin/env python3
"""Reproduce the d|c|/dt contour data: xi = 1, kappa in [0, 14], t in [0, 10].

Writes one CSV record per grid point (columns t, kappa, d_abs_c_dt), ready
for any contour plotting tool.  The sign structure is the point: rows with
kappa >= 8 are non-positive everywhere, rows below 8 turn positive once per
oscillation window.
"""

import argparse
import sys

from qubitbath.cli import main as cli_main


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="contour.csv")
    parser.add_argument("--xi", default="1")
    parser.add_argument("--kappa-range", default="0:14:141")
    parser.add_argument("--t-max", default="10")
    parser.add_argument("--dt", default="0.01")
    args = parser.parse_args()
    code = cli_main(
        [
            "contour",
            "--xi", args.xi,
            "--kappa-range", args.kappa_range,
            "--t-max", args.t_max,
            "--dt", args.dt,
            "--out", args.out,
        ]
    )
    if code == 0:
        print(f"wrote {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(run())
