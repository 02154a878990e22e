"""Weighted-space membership, seminorms, asymptotic sign estimates and the
aggregated Liouville harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _quad
from .core import (
    CheckResult,
    DomainError,
    FractionalParams,
    SpaceTimeGrid,
    VerificationReport,
    sample,
)
from .dualop import Quadratures, dual_apply, fourier_support_check, symbol
from .functions import TestFunction, affine, constant

SPACES = ("L_2s_alpha", "L_2s", "L_alpha")


@dataclass
class MembershipReport:
    space: str
    truncated_values: list[tuple[float, float]]
    verdict: str
    extrapolated_limit: float | None
    details: dict = field(default_factory=dict)


# {{{ weighted norms


def _shell_nodes(edges: np.ndarray, panels: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Kronrod nodes on each shell ``[edges[i], edges[i+1]]``; returns nodes, weights, shell id."""
    nodes, weights, ids = [], [], []
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        x, w, _ = _quad.panel_nodes(_quad.uniform_edges(np.array(lo), np.array(hi), panels))
        nodes.append(x)
        weights.append(w)
        ids.append(np.full(x.size, i))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(ids)


def _cell_matrix(u: TestFunction, space: str, params: FractionalParams,
                 edges: np.ndarray, angular_nodes: int) -> np.ndarray:
    """Weighted integral of ``|u|`` over (space shell i) x (time shell j)."""
    n, s, alpha = params.n, params.s, params.alpha
    r, wr, ir = _shell_nodes(edges)
    tau, wt, it = _shell_nodes(edges)
    K = edges.size - 1

    if space == "L_alpha":
        # past half-line at x = 0
        vals = np.abs(u.value(np.zeros((tau.size, n)), -tau)) / (1 + tau ** (1 + alpha))
        C = np.zeros((1, K))
        np.add.at(C[0], it, vals * wt)
        return C

    if n == 1:
        dirs, wd = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    else:
        dirs, wd = _quad.full_sphere_rule(n, angular_nodes)
    jac = r ** (n - 1) / (1 + r ** (n + 2 * s))
    X = r[:, None, None] * dirs[None, :, :]  # (R, D, n)

    if space == "L_2s":
        vals = np.abs(u.value(X, np.zeros(X.shape[:-1]))) @ wd
        C = np.zeros((K, 1))
        np.add.at(C[:, 0], ir, vals * jac * wr)
        return C

    C = np.zeros((K, K))
    tw = wt / (1 + tau ** (1 + alpha))
    for sign in (1.0, -1.0):
        for j0 in range(0, tau.size, 64):
            tj = sign * tau[j0:j0 + 64]
            vals = np.abs(u.value(X[:, :, None, :], tj[None, None, :]))  # (R, D, Tc)
            radial = np.einsum("rdt,d->rt", vals, wd) * (jac * wr)[:, None] * tw[j0:j0 + 64]
            blk = np.zeros((K, radial.shape[1]))
            np.add.at(blk, ir, radial)
            np.add.at(C.T, it[j0:j0 + 64], blk.T)
    return C


def _increment_slope(R: np.ndarray, inc: np.ndarray, last: int = 5) -> float | None:
    R, inc = R[-last:], inc[-last:]
    if np.all(inc == 0):
        return -math.inf
    pos = inc > 0
    if np.sum(pos) < 3:
        return None
    return float(np.polyfit(np.log(R[pos]), np.log(inc[pos]), 1)[0])


def weighted_norm(u: TestFunction, space: str, params: FractionalParams,
                  cutoffs: Sequence[float] | None = None, *, angular_nodes: int = 16
                  ) -> MembershipReport:
    """Truncated weighted integrals of ``|u|`` over growing boxes and a finiteness verdict.

    The weights are ``(1 + |x|^{n+2s})^{-1} (1 + |t|^{1+alpha})^{-1}`` for
    ``L_2s_alpha``, the spatial factor alone at ``t = 0`` for ``L_2s``, and
    the temporal factor over the past at ``x = 0`` for ``L_alpha``.  The
    verdict comes from the power-law trend of the increments: ``finite``
    when they decay, ``infinite`` when they do not, ``inconclusive``
    otherwise.
    """
    if space not in SPACES:
        raise DomainError(f"space must be one of {SPACES}, got {space!r}")
    R = np.asarray(cutoffs if cutoffs is not None else 2.0 ** np.arange(0, 13), dtype=float)
    if R.size < 5 or np.any(np.diff(R) <= 0) or R[0] <= 0:
        raise DomainError("need at least 5 increasing positive cutoffs")
    edges = np.concatenate([[0.0], R])
    C = _cell_matrix(u, space, params, edges, angular_nodes)
    K = R.size
    totals = np.array([np.sum(C[:min(k + 1, C.shape[0]), :min(k + 1, C.shape[1])])
                       for k in range(K)])
    inc = np.diff(totals)
    # trend of each marginal shell series (space shells over all times and vice versa)
    slopes = [_increment_slope(R, m) for m in (C.sum(axis=1), C.sum(axis=0)) if m.size > 1]
    p = None if any(q is None for q in slopes) else max(slopes)

    if p is None:
        verdict = "inconclusive"
    elif p <= -0.05:
        verdict = "finite"
    elif p >= -0.01 and inc[-1] > 0:
        verdict = "infinite"
    else:
        verdict = "inconclusive"

    limit = None
    if verdict == "finite":
        if math.isinf(p):
            limit = float(totals[-1])
        else:
            ratio = float((R[-1] / R[-2]) ** p)
            limit = float(totals[-1] + inc[-1] * ratio / (1 - ratio))
    return MembershipReport(space, list(zip(R.tolist(), totals.tolist())), verdict, limit,
                            details={"increment_exponent": p})


# }}}


# {{{ seminorms


@dataclass
class SeminormReport:
    value: float
    shell_radii: list[float]
    shell_sups: list[float]
    unbounded: bool
    argmax: tuple[float, ...]


def _weight(x: np.ndarray, t: np.ndarray, params: FractionalParams) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    return (1 + r ** (params.n + 2 * params.s)) * (1 + np.abs(t) ** (1 + params.alpha))


def seminorm_shells(phi: TestFunction, gamma_idx: Sequence[int], beta_idx: int,
                    params: FractionalParams, grid: SpaceTimeGrid | None = None,
                    shells: Sequence[float] | None = None, samples: int = 33) -> SeminormReport:
    """Sampled ``sup (1+|x|^{n+2s})(1+|t|^{1+alpha}) |d_x^gamma d_t^beta phi|``."""
    n = params.n
    deriv = phi.derivative(tuple(gamma_idx) or (0,) * n, int(beta_idx))
    grid = grid or SpaceTimeGrid(4.0, 64, -4.0, 4.0, 64, n=n)
    shells = np.asarray(shells if shells is not None else np.geomspace(1.0, 128.0, 15), float)

    x, t = grid.mesh()
    vals = np.abs(deriv(x, t)) * _weight(x, t, params)
    best = float(np.max(vals))
    argmax = tuple(np.append(x.reshape(-1, n)[np.argmax(vals)], t.ravel()[np.argmax(vals)]))

    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs, _ = _quad.full_sphere_rule(n, 8)
    sups = []
    lin = np.linspace(-1.0, 1.0, samples)
    for R in shells:
        # lateral face |x| = R, |t| <= R and caps |t| = R, |x| <= R
        xs = R * dirs[:, None, :] * np.ones((1, samples, 1))
        ts = np.broadcast_to(R * lin, xs.shape[:-1])
        xc = (R * (lin[:, None, None] + 1) / 2) * dirs[None, :, :]
        tc = np.concatenate([np.full(xc.shape[:-1], R), np.full(xc.shape[:-1], -R)])
        xc = np.concatenate([xc, xc])
        pts = [(xs, ts), (xc, tc)]
        m = 0.0
        for X, T in pts:
            v = np.abs(deriv(X, T)) * _weight(X, T, params)
            k = int(np.argmax(v))
            if v.ravel()[k] > m:
                m = float(v.ravel()[k])
                if m > best:
                    best = m
                    argmax = tuple(np.append(X.reshape(-1, n)[k], T.ravel()[k]))
        sups.append(m)

    sups_a = np.asarray(sups)
    tail = sups_a[-5:]
    unbounded = bool(np.all(np.diff(tail) > 0) and tail[-1] > 1.5 * tail[0])
    return SeminormReport(best, shells.tolist(), sups, unbounded, argmax)


def seminorm(phi: TestFunction, gamma_idx: Sequence[int], beta_idx: int,
             params: FractionalParams, grid: SpaceTimeGrid | None = None) -> float:
    """Sampled weighted supremum of one derivative of ``phi``; see :func:`seminorm_shells`."""
    return seminorm_shells(phi, gamma_idx, beta_idx, params, grid).value


# }}}


# {{{ asymptotic sign


@dataclass
class GammaEstimate:
    gamma: float
    shells: list[float]
    minima: list[float]
    """Minimum of ``u / |x|^gamma`` on each shell."""
    minima_negated: list[float]
    """Same for ``-u``."""
    trend: float
    trend_negated: float
    nonnegative_estimate: bool
    nonnegative_estimate_negated: bool
    label: str = "estimate"


def asymptotic_gamma_estimate(u: TestFunction, gamma: float, t_slice: float = 0.0,
                              shells: Sequence[float] = (8.0, 16.0, 32.0, 64.0, 128.0),
                              angular_nodes: int = 16, tol: float = 1e-12) -> GammaEstimate:
    """Shell minima of ``u(x, t) / |x|^gamma``, an estimate of the sign of its liminf.

    Finite sampling cannot certify a liminf, so the result is reported as an
    estimate, never as a verdict.
    """
    if not 0 <= gamma <= 1:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    R = np.asarray(shells, dtype=float)
    if np.any(np.diff(R) <= 0) or R[-1] < 64:
        raise DomainError("shells must increase and reach at least 64")
    n = u.n
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    dirs = axes if n == 1 else np.concatenate([axes, _quad.full_sphere_rule(n, angular_nodes)[0]])
    X = R[:, None, None] * dirs[None, :, :]
    vals = np.real(u.value(X, np.full(X.shape[:-1], t_slice))) / R[:, None] ** gamma
    mins = vals.min(axis=1)
    mins_neg = (-vals).min(axis=1)
    return GammaEstimate(
        gamma, R.tolist(), mins.tolist(), mins_neg.tolist(),
        float(mins[-1]), float(mins_neg[-1]),
        bool(mins[-1] >= -tol), bool(mins_neg[-1] >= -tol),
    )


# }}}


# {{{ Liouville harness


def _probe_points(n: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([0.0, 0.7, -2.3, 5.0])
    X = np.zeros((xs.size, 3, n))
    X[..., 0] = xs[:, None]
    if n > 1:
        X[..., 1] = 0.4
    T = np.broadcast_to(np.array([-1.5, 0.0, 2.0]), (xs.size, 3))
    return X, T


def liouville_harness(params: FractionalParams, quads: Quadratures | None = None,
                      grid: SpaceTimeGrid | None = None) -> VerificationReport:
    """Kernel, symbol-zero, Fourier-support and membership checks in one report."""
    quads = quads or Quadratures()
    n, s = params.n, params.s
    grid = grid or SpaceTimeGrid(16.0, 32, -8.0, 8.0, 32, n=n)
    if grid.n != n:
        raise DomainError("grid dimension differs from params.n")
    checks: list[CheckResult] = []
    X, T = _probe_points(n)

    # (a) kernel: constants always, x_1 when 2s > 1
    worst = 0.0
    for u in (constant(1.0, n), affine((0.0,) * n, c0=1.0, n=n)):
        worst = max(worst, float(np.max(np.abs(dual_apply(u, X, T, "right", params, quads)))))
    checks.append(CheckResult("kernel_constant", worst <= 1e-8, worst, 1e-8))
    x1 = affine((1.0,), n=n)
    if s > 0.5:
        v = float(np.max(np.abs(dual_apply(x1, X, T, "right", params, quads))))
        checks.append(CheckResult("kernel_affine", v <= 1e-6, v, 1e-6))
    else:
        checks.append(CheckResult("kernel_affine", True, None, 1e-6, applicable=False,
                                  details={"reason": "not applicable (s <= 1/2)"}))

    # (b) the multiplier vanishes only at the origin of the sampled lattice
    k, r = grid.frequency_mesh()
    sym = symbol(k if n > 1 else k[..., 0], r, params, "right")
    origin = (np.linalg.norm(k, axis=-1) == 0) & (r == 0)
    off = float(np.min(np.abs(sym[~origin])))
    at0 = float(np.max(np.abs(sym[origin])))
    re_min = float(np.min(sym.real))
    ok = off > 0 and at0 == 0 and re_min >= 0
    checks.append(CheckResult("symbol_zero_only_at_origin", ok, off, 0.0,
                              details={"value_at_origin": at0, "min_real_part": re_min}))

    # (c) Fourier support of sampled solutions
    rc = fourier_support_check(sample(constant(1.0, n), grid))
    ra = fourier_support_check(sample(x1, grid))
    under = bool(rc.details["under_resolved"])
    checks.append(CheckResult("fourier_support_constant", rc.passed, rc.measured, rc.tolerance))
    checks.append(CheckResult("fourier_support_affine", ra.details["affine_like"],
                              ra.details["affine_residual"], ra.tolerance,
                              details={"outside_mass": ra.measured}))

    # (d) membership
    mc = weighted_norm(constant(1.0, n), "L_2s_alpha", params)
    checks.append(CheckResult("constant_in_weighted_space", mc.verdict == "finite",
                              mc.verdict, "finite"))
    ma = weighted_norm(x1, "L_2s_alpha", params)
    expect = "finite" if s > 0.5 else "infinite"
    checks.append(CheckResult("affine_membership", ma.verdict == expect, ma.verdict, expect,
                              details={"increment_exponent": ma.details["increment_exponent"]}))

    passed = all(c.passed for c in checks)
    return VerificationReport(
        "liouville_harness", passed, sum(c.passed for c in checks), len(checks),
        dict(alpha=params.alpha, s=s, n=n), "only constants solve the homogeneous equation",
        details={"under_resolved": under}, checks=checks,
    )


# }}}
