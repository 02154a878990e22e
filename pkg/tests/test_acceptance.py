"""End-to-end acceptance criteria, one test per criterion."""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from fracdual.abel import (
    c0_divergence_demo,
    max_principle_check,
    random_history_problem,
    truncated_values,
    verify_fftc,
)
from fracdual.analysis import liouville_harness, weighted_norm
from fracdual.core import SpaceTimeGrid, make_params
from fracdual.dualop import counterexample_lower_bound, decay_profile, verify_multiplier, verify_parts
from fracdual.fraclap import frac_laplacian_direct
from fracdual.functions import affine, bump_product, exponential_time, gaussian, time_bump
from fracdual.marchaud import marchaud_left

SWEEP = [(a, s) for a in (0.3, 0.5, 0.7) for s in (0.25, 0.5, 0.75)]


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, text: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'}: {text}")
        assert ok, text
    return emit


def test_01_multiplier_identity(report):
    grid = SpaceTimeGrid(16.0, 256, -16.0, 16.0, 256)
    t0 = time.perf_counter()
    errs = {pair: verify_multiplier(gaussian(1), "right", make_params(*pair), grid).measured
            for pair in SWEEP}
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    report(1, worst <= 1e-3 and elapsed < 60,
           f"multiplier identity max rel error {worst:.2e} <= 1e-3 over 9 pairs ({elapsed:.1f} s)")


def test_02_duality_pairing(report):
    grid = SpaceTimeGrid(12.0, 128, -12.0, 12.0, 128)
    g = gaussian(1)
    pairs = [(g, g), (g, g.shifted(0.7, -0.4)),
             (gaussian(1, width=0.8, x0=0.3, t0=0.2), gaussian(1, width=1.3))]
    t0 = time.perf_counter()
    ratios = []
    for pair in [(0.3, 0.25), (0.5, 0.5), (0.7, 0.75)]:
        p = make_params(*pair)
        for u, phi in pairs:
            r = verify_parts(u, phi, p, grid)
            ratios.append(r.abs_gap / (1e-4 * (1 + abs(r.lhs))))
    elapsed = time.perf_counter() - t0
    report(2, max(ratios) <= 1 and elapsed < 60,
           f"pairing gap / (1e-4 (1 + |lhs|)) max {max(ratios):.2e} over 9 cases ({elapsed:.1f} s)")


def test_03_sharp_decay(report):
    p = make_params(0.5, 0.5, 1)
    t0 = time.perf_counter()
    fits = {(name, axis): decay_profile(u, axis, p)
            for name, u in (("bump_product", bump_product(1)), ("gaussian", gaussian(1)))
            for axis in ("space", "time")}
    elapsed = time.perf_counter() - t0
    ok = all(f.exponent_gap <= 0.1 for f in fits.values())
    span = all(f.samples[-1][0] / f.samples[0][0] >= 10 for f in fits.values())
    text = ", ".join(f"{k[0]}/{k[1]} {f.fitted_exponent:.3f} (target {f.theoretical_exponent})"
                     for k, f in fits.items())
    report(3, ok and span and elapsed < 120, f"decay exponents {text} ({elapsed:.1f} s)")


def test_04_optimality(report):
    rows = []
    ok = True
    for n in (1, 2, 3):
        p = make_params(0.5, 0.5, n)
        r = counterexample_lower_bound(p, radii=np.geomspace(3.0, 64.0, 12),
                                       times=(-1.0, -0.5, 0.0, 0.5, 1.0))
        c0, slope = r.details["c0"], r.details["slope"]
        ok = ok and r.passed and c0 > 0 and slope <= n + 2 * p.s + 0.1
        rows.append(f"n={n} C0={c0:.3e} slope={slope:.3f}")
    report(4, ok, "bump-product lower bound on |x| in [3, 64]: " + "; ".join(rows))


def test_05_eigenfunction_oracles(report):
    worst = 0.0
    t = np.linspace(-2.0, 2.0, 17)
    for alpha in (0.1, 0.5, 0.9):
        for lam in (0.25, 1.0, 2.0):
            got = marchaud_left(exponential_time(lam), t, make_params(alpha, 0.5))
            worst = max(worst, float(np.max(np.abs(got - lam**alpha * np.exp(lam * t))
                                            / np.exp(lam * t))))
    v = frac_laplacian_direct(gaussian(1), np.array([0.0]), make_params(0.5, 0.5)).real
    rel = abs(v - math.sqrt(2 / math.pi)) / math.sqrt(2 / math.pi)
    report(5, worst <= 1e-5 and rel <= 1e-4,
           f"exponential eigenvalue error {worst:.2e} <= 1e-5; Gaussian half-Laplacian at 0 "
           f"rel error {rel:.2e} <= 1e-4")


def test_06_fundamental_theorem(report):
    ts = np.linspace(-3.0, 3.0, 13)
    worst = 0.0
    ok = True
    for alpha in (0.1, 0.5, 0.9):
        for f in (time_bump(-1.0, 1.0), exponential_time(1.0)):
            r = verify_fftc(f, make_params(alpha, 0.5), ts)
            ok = ok and r.passed
            worst = max(worst, r.measured / (1 + r.details["max_abs_f"]))
    report(6, ok, f"round trip error / (1 + max|f|) max {worst:.2e} <= 1e-4")


def test_07_maximum_principle(report):
    rng = np.random.default_rng(20240531)
    mins = []
    for k in range(20):
        alpha = (0.1, 0.3, 0.5, 0.7, 0.9)[k % 5]
        mins.append(max_principle_check(random_history_problem(rng, alpha)).measured)
    report(7, min(mins) >= -1e-10,
           f"minimum over 20 random nonnegative histories {min(mins):.3e} >= -1e-10")


def test_08_truncation_monotone_and_divergent(report):
    R = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    worst_drop = 0.0
    for alpha in (0.1, 0.5, 0.9):
        p = make_params(alpha, 0.5)
        for f in (gaussian(1, width=2.0), time_bump(-10.0, 0.5), exponential_time(0.5)):
            v = truncated_values(f, 0.5, p, R)
            worst_drop = max(worst_drop, float(np.max(-np.diff(v))))
    gaps = {}
    ok = True
    for alpha in (0.1, 0.5, 0.9):
        r = c0_divergence_demo(make_params(alpha, 0.5), 0.0, 1.0, 1.0)
        ok = ok and r.passed
        gaps[alpha] = r.details["growth_exponent"]
    text = ", ".join(f"alpha={a}: {g:.4f}" for a, g in gaps.items())
    report(8, worst_drop <= 1e-12 and ok,
           f"largest decrease of v_R {worst_drop:.1e} <= 1e-12; growth exponents for f = 1: {text}")


def test_09_liouville_harness(report):
    ok = True
    for n in (1, 2):
        for alpha in (0.3, 0.5, 0.7):
            for s in (0.25, 0.75):
                r = liouville_harness(make_params(alpha, s, n))
                c = {x.name: x for x in r.checks}
                ok = ok and r.passed and c["kernel_constant"].measured <= 1e-8
                if s > 0.5:
                    ok = ok and c["kernel_affine"].measured <= 1e-6
                ok = ok and c["symbol_zero_only_at_origin"].passed
    verdicts = {s: weighted_norm(affine((1.0,)), "L_2s_alpha", make_params(0.5, s)).verdict
                for s in (0.25, 0.4, 0.6, 0.75)}
    flips = verdicts == {0.25: "infinite", 0.4: "infinite", 0.6: "finite", 0.75: "finite"}
    report(9, ok and flips, f"harness checks pass for n in (1, 2); x1 membership {verdicts}")


def test_10_full_suite_deterministic(report, tmp_path):
    outs = []
    times = []
    codes = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "fracdual.cli", "verify", "--out", str(path)],
                              capture_output=True, timeout=900)
        times.append(time.perf_counter() - t0)
        codes.append(proc.returncode)
        outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    report(10, codes == [0, 0] and same and max(times) < 900,
           f"default verify exit codes {codes}, identical bytes {same}, "
           f"runtimes {times[0]:.0f} s / {times[1]:.0f} s")
