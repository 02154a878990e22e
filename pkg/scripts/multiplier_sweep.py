"""Multiplier-identity error of the Gaussian over a grid of (alpha, s)."""

from __future__ import annotations

import argparse
import time

from fracdual.core import SpaceTimeGrid, make_params
from fracdual.dualop import verify_multiplier
from fracdual.functions import gaussian


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--L", type=float, default=16.0)
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--side", choices=("left", "right"), default="right")
    args = ap.parse_args()

    grid = SpaceTimeGrid(args.L, args.N, -args.L, args.L, args.N)
    print(f"{'alpha':>6} {'s':>6} {'rel_err':>10} {'band':>7} {'secs':>6}")
    for a in args.alpha:
        for s in args.s:
            t0 = time.perf_counter()
            r = verify_multiplier(gaussian(1), args.side, make_params(a, s), grid)
            print(f"{a:6.2f} {s:6.2f} {r.measured:10.3e} {r.details['band_points']:7d} "
                  f"{time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
