"""Periodic spectral route versus the whole-line direct evaluator, before and after
subtracting the periodic images, as the box half-length L grows."""

from __future__ import annotations

import argparse

import numpy as np

from fracdual.core import SpaceTimeGrid, make_params, sample
from fracdual.fraclap import frac_laplacian_direct, frac_laplacian_spectral, periodic_image_sum
from fracdual.functions import gaussian


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--L", type=float, nargs="+", default=[8.0, 16.0, 32.0, 64.0])
    ap.add_argument("--dx", type=float, default=0.125)
    args = ap.parse_args()

    u = gaussian(1)
    print(f"{'s':>5} {'L':>6} {'raw_gap':>10} {'corrected_gap':>14} {'predicted_order':>16}")
    for s in args.s:
        p = make_params(0.5, s)
        for L in args.L:
            N = int(2 ** np.ceil(np.log2(2 * L / args.dx)))
            grid = SpaceTimeGrid(L, N, -1.0, 1.0, 8)
            spectral = frac_laplacian_spectral(sample(u, grid), p).values[N // 2, 4]  # x = 0, t = 0
            direct = frac_laplacian_direct(u, np.array([0.0]), p)
            corr = periodic_image_sum(u, np.array([0.0]), p, L)
            print(f"{s:5.2f} {L:6.1f} {abs(spectral - direct):10.3e} {abs(spectral - direct - corr):14.3e} "
                  f"{(2 * L) ** (-1 - 2 * s):16.3e}")


if __name__ == "__main__":
    main()
