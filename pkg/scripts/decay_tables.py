"""Fitted space and time decay exponents of the dual operator on the built-in test functions."""

from __future__ import annotations

import argparse

from fracdual.core import make_params
from fracdual.dualop import decay_profile
from fracdual.functions import bump_product, gaussian


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--samples", action="store_true", help="also print the sampled profiles")
    args = ap.parse_args()

    funcs = {"bump_product": bump_product(args.n), "gaussian": gaussian(args.n)}
    print(f"{'function':>12} {'axis':>5} {'alpha':>6} {'s':>6} {'fitted':>8} {'theory':>7} {'r2':>8}")
    for a in args.alpha:
        for s in args.s:
            p = make_params(a, s, args.n)
            for name, u in funcs.items():
                for axis in ("space", "time"):
                    r = decay_profile(u, axis, p)
                    print(f"{name:>12} {axis:>5} {a:6.2f} {s:6.2f} {r.fitted_exponent:8.4f} "
                          f"{r.theoretical_exponent:7.3f} {r.fit_r2:8.5f}")
                    if args.samples:
                        for rad, m in r.samples:
                            print(f"    {rad:10.4f} {m:.6e}")


if __name__ == "__main__":
    main()
