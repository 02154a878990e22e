"""Round trip D_left^alpha (I^alpha f) = f and the first-order marching scheme."""

from __future__ import annotations

import argparse
import math

import numpy as np

from fracdual.abel import HistoryProblem, solve_history_ivp, verify_fftc
from fracdual.core import make_params
from fracdual.functions import exponential_time, time_bump


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    args = ap.parse_args()

    ts = np.linspace(-3.0, 3.0, 25)
    print("round trip: max |D(I f) - f|")
    for a in args.alpha:
        p = make_params(a, 0.5)
        errs = [verify_fftc(f, p, ts).measured for f in (time_bump(-1.0, 1.0), exponential_time(1.0))]
        print(f"  alpha={a:4.2f}  bump {errs[0]:.2e}  exponential {errs[1]:.2e}")

    print("marching: D w = 1 on (0, 1], w = 0 before; error at t = 1")
    one = lambda t: np.ones_like(np.asarray(t, float))  # noqa: E731
    zero = lambda t: np.zeros_like(np.asarray(t, float))  # noqa: E731
    for a in args.alpha:
        exact = 1 / math.gamma(1 + a)
        row = []
        for M in (32, 64, 128, 256, 512):
            sol = solve_history_ivp(HistoryProblem(zero, one, 0.0, 1.0, M, a, history_start=0.0))
            row.append(abs(sol.w[-1] - exact))
        rates = [math.log2(row[i] / row[i + 1]) for i in range(len(row) - 1)]
        print(f"  alpha={a:4.2f}  errors " + " ".join(f"{e:.2e}" for e in row)
              + "  rates " + " ".join(f"{r:.2f}" for r in rates))


if __name__ == "__main__":
    main()
