"""Command-line entry point: verification sweeps, pointwise evaluation, decay
tables and the fractional-integral solver."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np

from . import abel, analysis, dualop
from .core import DomainError, FractionalParams, SpaceTimeGrid, VerificationReport, make_params
from .fraclap import SpaceQuadrature
from .functions import (REGISTRY, TestFunction, affine, bump_product, exponential_time, gaussian,
                        time_bump)
from .marchaud import TimeQuadrature, marchaud

FAMILIES = (
    "multiplier",
    "parts",
    "decay",
    "counterexample",
    "fftc",
    "max_principle",
    "truncation",
    "c0_divergence",
    "liouville",
)
OPTIONAL_FAMILIES = ("affine_kernel",)


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    alpha: tuple[float, ...] = (0.3, 0.5, 0.7)
    s: tuple[float, ...] = (0.25, 0.5, 0.75)
    n: int = 1
    grid_L: float = 16.0
    grid_N: int = 256
    t_min: float = -16.0
    t_max: float = 16.0
    t_steps: int = 256
    near_cut: float | None = None
    far_cut: float = 50.0
    tol: float = 1e-3
    format: str = "json"
    out: str | None = None
    checks: tuple[str, ...] = FAMILIES

    def params(self) -> list[FractionalParams]:
        return [make_params(a, s, self.n) for a in self.alpha for s in self.s]

    def grid(self) -> SpaceTimeGrid:
        return SpaceTimeGrid(self.grid_L, self.grid_N, self.t_min, self.t_max, self.t_steps,
                             n=self.n)

    def quads(self) -> dualop.Quadratures:
        tq = TimeQuadrature(near_cut=self.near_cut, far_cut=self.far_cut)
        sq = SpaceQuadrature() if self.near_cut is None else SpaceQuadrature(near_cut=self.near_cut)
        return dualop.Quadratures(tq, sq)

    def validate(self) -> None:
        if not self.alpha or not self.s:
            raise ConfigError("sweeps must be nonempty")
        self.params()
        self.grid()
        self.quads()
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        unknown = set(self.checks) - set(FAMILIES) - set(OPTIONAL_FAMILIES)
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(sorted(unknown))}")


# {{{ check families


def _pairing_grid(cfg: RunConfig) -> SpaceTimeGrid:
    return SpaceTimeGrid(cfg.grid_L, max(8, cfg.grid_N // 2), cfg.t_min, cfg.t_max,
                         max(8, cfg.t_steps // 2), n=cfg.n)


def _fam_multiplier(p, cfg):
    return dualop.verify_multiplier(gaussian(1), "right", p, cfg.grid(), cfg.quads(), cfg.tol)


def _fam_parts(p, cfg):
    g = gaussian(cfg.n)
    pairs = [
        (g, g),
        (g, g.shifted(np.full(cfg.n, 0.7), -0.4)),
        (gaussian(cfg.n, width=0.8, x0=0.3, t0=0.2), gaussian(cfg.n, width=1.3)),
    ]
    grid = _pairing_grid(cfg)
    reps = [dualop.verify_parts(u, v, p, grid, cfg.quads()) for u, v in pairs]
    rel = max(r.abs_gap / (1 + abs(r.lhs)) for r in reps)
    return VerificationReport("parts", all(reps), rel, 1e-4, {}, "duality pairing identity",
                              details={"gaps": [r.abs_gap for r in reps]})


def _fam_decay(p, cfg):
    q = cfg.quads()
    fits = {
        "bump_space": dualop.decay_profile(bump_product(cfg.n), "space", p, q),
        "bump_time": dualop.decay_profile(bump_product(cfg.n), "time", p, q),
        "gaussian_space": dualop.decay_profile(gaussian(cfg.n), "space", p, q),
        "gaussian_time": dualop.decay_profile(gaussian(cfg.n), "time", p, q),
    }
    gap = max(f.exponent_gap for f in fits.values())
    return VerificationReport("decay", gap <= 0.1, gap, 0.1, {}, "sharp space-time decay bound",
                              details={k: f.fitted_exponent for k, f in fits.items()})


def _fam_counterexample(p, cfg):
    return dualop.counterexample_lower_bound(p, cfg.quads())


def _fam_fftc(p, cfg):
    ts = np.linspace(-3.0, 3.0, 13)
    reps = [abel.verify_fftc(f, p, ts, cfg.quads().time)
            for f in (time_bump(-1.0, 1.0), exponential_time(1.0))]
    rel = max(r.measured / r.tolerance * 1e-4 for r in reps)
    return VerificationReport("fftc", all(reps), rel, 1e-4, {},
                              "fractional fundamental theorem of calculus")


def _fam_max_principle(p, cfg):
    rng = np.random.default_rng(20240531)
    worst = math.inf
    ok = True
    for _ in range(20):
        prob = abel.random_history_problem(rng, p.alpha)
        rep = abel.max_principle_check(prob)
        worst = min(worst, rep.measured)
        ok = ok and rep.passed
    return VerificationReport("max_principle", ok, worst, -1e-10, {},
                              "maximum principle for the left Marchaud derivative")


def _fam_truncation(p, cfg):
    q = cfg.quads().time
    reps = [
        abel.truncation_convergence(time_bump(-1.0, 0.0), 1.0, p, [2.0, 4.0, 8.0, 16.0], q),
        abel.truncation_convergence(exponential_time(1.0), 0.0, p,
                                    [5.0, 10.0, 20.0, 40.0, 80.0], q),
    ]
    gap = max(abs(r.values[-1] - r.limit) / max(1.0, abs(r.limit)) for r in reps)
    ok = all(r.monotone and r.converged for r in reps)
    return VerificationReport("truncation", ok, gap, 1e-6, {},
                              "monotone convergence of truncated history integrals")


def _fam_c0(p, cfg):
    return abel.c0_divergence_demo(p, 0.0, 1.0, 1.0, q=cfg.quads().time)


def _fam_liouville(p, cfg):
    rep = analysis.liouville_harness(p, cfg.quads())
    failed = sum(not c.passed for c in rep.checks)
    rep.measured = failed
    rep.tolerance = 0
    return rep


def _fam_affine_kernel(p, cfg):
    anchor = "affine functions in the kernel when 2s > 1"
    if p.s <= 0.5:
        return VerificationReport("affine_kernel", True, "not applicable (s <= 1/2)", 1e-6, {},
                                  anchor, applicable=False)
    X = np.array([[0.0], [1.3], [-4.0]]) * np.eye(cfg.n)[0]
    v = float(np.max(np.abs(dualop.dual_apply(affine((1.0,), n=cfg.n), X, np.zeros(3),
                                               "right", p, cfg.quads()))))
    return VerificationReport("affine_kernel", v <= 1e-6, v, 1e-6, {}, anchor)


_FAMILY_FN: dict[str, Callable[[FractionalParams, RunConfig], VerificationReport]] = {
    "multiplier": _fam_multiplier,
    "parts": _fam_parts,
    "decay": _fam_decay,
    "counterexample": _fam_counterexample,
    "fftc": _fam_fftc,
    "max_principle": _fam_max_principle,
    "truncation": _fam_truncation,
    "c0_divergence": _fam_c0,
    "liouville": _fam_liouville,
    "affine_kernel": _fam_affine_kernel,
}


def _plain(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    return v


def _run_one(task: tuple[str, FractionalParams, RunConfig]) -> dict[str, Any]:
    name, p, cfg = task
    try:
        rep = _FAMILY_FN[name](p, cfg)
        passed, measured, tol, anchor = rep.passed, rep.measured, rep.tolerance, rep.anchor
    except (ArithmeticError, ValueError) as exc:
        passed, measured, tol, anchor = False, f"error: {exc}", None, ""
    return {
        "name": name,
        "params": {"alpha": p.alpha, "s": p.s, "n": p.n},
        "measured": _plain(measured),
        "tolerance": _plain(tol),
        "passed": bool(passed),
        "paper_anchor": anchor,
    }


def worker_count() -> int:
    env = os.environ.get("FRACDUAL_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError as exc:
            raise ConfigError(f"FRACDUAL_THREADS must be an integer, got {env!r}") from exc
        if k < 1:
            raise ConfigError("FRACDUAL_THREADS must be >= 1")
        return k
    return os.cpu_count() or 1


def run_verify(cfg: RunConfig) -> dict[str, Any]:
    cfg.validate()
    tasks = [(name, p, cfg) for p in cfg.params() for name in cfg.checks]
    workers = worker_count()
    if workers == 1:
        records = [_run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, tasks))
    passed = sum(r["passed"] for r in records)
    config = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()
              if k not in ("out", "format")}
    return {
        "config": config,
        "checks": records,
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed},
    }


# }}}


# {{{ output


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    if v is None:
        return ""
    return str(v)


def _csv_text(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_text(report: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=False) + "\n"
    rows = []
    for r in report["checks"]:
        m = r["measured"]
        rows.append([r["name"], r["params"]["alpha"], r["params"]["s"], r["params"]["n"],
                     m if not isinstance(m, list) else complex(*m), r["tolerance"],
                     r["passed"], r["paper_anchor"]])
    return _csv_text(["name", "alpha", "s", "n", "measured", "tolerance", "passed",
                      "paper_anchor"], rows)


# }}}


# {{{ argument parsing


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _fparam(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, val = text.split("=", 1)
    nums = _floats(val)
    return key.strip(), nums[0] if len(nums) == 1 else nums


def _common(p: argparse.ArgumentParser, sweep: bool) -> None:
    typ = _floats if sweep else float
    p.add_argument("--alpha", type=typ, default=(0.3, 0.5, 0.7) if sweep else 0.5)
    p.add_argument("--s", type=typ, default=(0.25, 0.5, 0.75) if sweep else 0.5)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--grid-L", type=float, default=16.0)
    p.add_argument("--grid-N", type=int, default=256)
    p.add_argument("--t-min", type=float, default=-16.0)
    p.add_argument("--t-max", type=float, default=16.0)
    p.add_argument("--t-steps", type=int, default=256)
    p.add_argument("--near-cut", type=float, default=None)
    p.add_argument("--far-cut", type=float, default=50.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--format", choices=("csv", "json"), default="json" if sweep else "csv")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdual",
        description="Space-time fractional operators: verification and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the verification sweep and write a report")
    _common(v, sweep=True)
    v.add_argument("--checks", type=lambda s: tuple(x for x in s.split(",") if x),
                   default=FAMILIES, help="comma-separated check families")

    a = sub.add_parser("apply", help="evaluate the operator at points read from a CSV file")
    _common(a, sweep=False)
    a.add_argument("function", choices=sorted(REGISTRY))
    a.add_argument("--side", choices=("left", "right"), default="right")
    a.add_argument("--points", required=True, help="CSV with columns x_1..x_n, t")
    a.add_argument("--fparam", type=_fparam, action="append", default=[])

    d = sub.add_parser("decay", help="tabulate the decay of the operator output")
    _common(d, sweep=False)
    d.add_argument("function", choices=sorted(REGISTRY))
    d.add_argument("--axis", choices=("space", "time"), default="space")
    d.add_argument("--fparam", type=_fparam, action="append", default=[])

    s = sub.add_parser("solve", help="u = I^alpha f on a time range")
    _common(s, sweep=False)
    s.add_argument("function", choices=sorted(REGISTRY))
    s.add_argument("--roundtrip", action="store_true",
                   help="append the left Marchaud derivative of u and f for comparison")
    s.add_argument("--fparam", type=_fparam, action="append", default=[])
    return parser


def _config(ns: argparse.Namespace, sweep: bool) -> RunConfig:
    alpha = ns.alpha if sweep else (ns.alpha,)
    s = ns.s if sweep else (ns.s,)
    cfg = RunConfig(
        alpha=tuple(alpha), s=tuple(s), n=ns.n, grid_L=ns.grid_L, grid_N=ns.grid_N,
        t_min=ns.t_min, t_max=ns.t_max, t_steps=ns.t_steps, near_cut=ns.near_cut,
        far_cut=ns.far_cut, tol=ns.tol, format=ns.format, out=ns.out,
        checks=tuple(getattr(ns, "checks", FAMILIES)),
    )
    if sweep:
        cfg.validate()
    else:
        cfg.params()
        cfg.quads()
    return cfg


def _function(ns: argparse.Namespace) -> TestFunction:
    kwargs = dict(ns.fparam)
    try:
        return REGISTRY[ns.function](n=ns.n, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {ns.function}: {exc}") from exc


# }}}


# {{{ commands


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verify(cfg)
    _emit(_report_text(report, cfg.format), cfg.out)
    return 0 if report["summary"]["failed"] == 0 else 1


def _read_points(path: str, n: int) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if i == 0:
                    continue  # header
                raise ConfigError(f"{path}:{i + 1}: non-numeric row")
            if len(vals) != n + 1:
                raise ConfigError(f"{path}:{i + 1}: expected {n + 1} columns, got {len(vals)}")
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, n + 1)


def cmd_apply(cfg: RunConfig, ns: argparse.Namespace) -> int:
    u = _function(ns)
    p = cfg.params()[0]
    try:
        pts = _read_points(ns.points, cfg.n)
    except OSError as exc:
        raise ConfigError(f"cannot read {ns.points}: {exc}") from exc
    header = [f"x{i + 1}" for i in range(cfg.n)] + ["t", "re_value", "im_value",
                                                     "err_estimate", "error"]
    rows = []
    failed = False
    for pt in pts:
        try:
            r = dualop.dual_apply(u, pt[:-1], pt[-1], ns.side, p, cfg.quads(), full_output=True)
            rows.append(list(pt) + [r.value.real, r.value.imag, r.error, ""])
        except (ArithmeticError, ValueError) as exc:
            failed = True
            rows.append(list(pt) + [None, None, None, str(exc)])
    _emit(_csv_text(header, rows), cfg.out)
    return 1 if failed else 0


def cmd_decay(cfg: RunConfig, ns: argparse.Namespace) -> int:
    u = _function(ns)
    p = cfg.params()[0]
    try:
        rep = dualop.decay_profile(u, ns.axis, p, cfg.quads())
    except ArithmeticError as exc:
        print(f"fracdual: {exc}", file=sys.stderr)
        return 1
    rows = [[r, m, rep.bound_constant / (1 + r**rep.theoretical_exponent)]
            for r, m in rep.samples]
    footer = json.dumps({
        "axis": rep.axis,
        "fitted_exponent": rep.fitted_exponent,
        "theoretical_exponent": rep.theoretical_exponent,
        "fit_r2": rep.fit_r2,
        "bound_constant": rep.bound_constant,
    })
    _emit(_csv_text(["radius", "max_magnitude", "model_value"], rows) + footer + "\n", cfg.out)
    return 0


def cmd_solve(cfg: RunConfig, ns: argparse.Namespace) -> int:
    f = _function(ns)
    p = cfg.params()[0]
    q = cfg.quads().time
    ts = np.linspace(cfg.t_min, cfg.t_max, cfg.t_steps + 1)
    try:
        u = np.asarray(abel.rl_integral(f, ts, p, q))
        header = ["t", "u"]
        cols = [ts, u.real]
        if np.any(np.abs(u.imag) > 1e-14 * (1 + np.abs(u))):
            header.append("u_imag")
            cols.append(u.imag)
        if ns.roundtrip:
            U = abel.fractional_integral(f, p, q)
            d = np.asarray(marchaud(U, ts, p, q, side="left", x=np.zeros(ts.shape + (f.n,))))
            header += ["dalpha_u", "f"]
            cols += [d.real, np.real(f.value(np.zeros(ts.shape + (f.n,)), ts))]
    except ArithmeticError as exc:
        print(f"fracdual: {exc}", file=sys.stderr)
        return 1
    rows = [list(r) for r in zip(*cols)]
    _emit(_csv_text(header, rows), cfg.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _config(ns, sweep=ns.command == "verify")
        if ns.command == "verify":
            return cmd_verify(cfg)
        if ns.command == "apply":
            return cmd_apply(cfg, ns)
        if ns.command == "decay":
            return cmd_decay(cfg, ns)
        return cmd_solve(cfg, ns)
    except (ConfigError, DomainError) as exc:
        print(f"fracdual: error: {exc}", file=sys.stderr)
        return 2


# }}}


if __name__ == "__main__":
    sys.exit(main())
