"""Riemann-Liouville integral, the fractional fundamental theorem, and the
truncated-history marching scheme for the left Marchaud derivative."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _quad
from .core import (
    CheckResult,
    DivergenceError,
    DomainError,
    FractionalParams,
    NonConvergenceError,
    VerificationReport,
    gamma_fn,
)
from .functions import TestFunction
from .marchaud import QuadResult, TimeQuadrature, marchaud

_NEAR_PANELS = 32


# {{{ Riemann-Liouville integral


def _is_zero(f: TestFunction) -> bool:
    return f.decay_class == "constant" and f.metadata.get("c", 1.0) == 0.0


def _check_history_tail(f: TestFunction, alpha: float) -> None:
    """Raise if ``int_{-inf} f(tau) (t - tau)^(alpha-1) dtau`` is infinite."""
    if f.is_windowed or _is_zero(f):
        return
    if f.decay_class == "constant":
        raise DivergenceError(
            f"{f.name}: a nonzero constant is not integrable against (t - tau)^(alpha - 1); "
            "the truncated integrals grow like R^alpha")
    if f.decay_class == "exponential_time" and f.exp_rate <= 0:
        raise DivergenceError(f"{f.name}: exp({f.exp_rate} t) does not decay toward -infinity")
    if f.decay_class == "plane_wave" and any(rho == 0 and a != 0 for a, _, rho in f.modes):
        raise DivergenceError(f"{f.name}: a zero-frequency mode is not integrable")
    if f.decay_class == "polynomial" and (f.t_growth is None or f.t_growth > -alpha):
        raise DivergenceError(
            f"{f.name}: decays no faster than |t|^-alpha toward -infinity")


def _near_scale(f: TestFunction) -> float:
    h = min(1.0, f.t_scale)
    if f.decay_class == "plane_wave":
        top = max((abs(rho) for _, _, rho in f.modes), default=0.0)
        if top > 0:
            h = min(h, 1.0 / top)
    return h


def _near(f, x, t, H, alpha):
    """``int_0^H f(t - d) d^(alpha-1) dd`` through ``sigma = d^alpha``."""
    d_edges = _quad.geometric_edges(1e-10 * H, H, _NEAR_PANELS)
    edges = np.concatenate([np.zeros(H.shape + (1,)), d_edges ** alpha], axis=-1)
    sig, wk, wg = _quad.panel_nodes(edges)
    d = sig ** (1.0 / alpha)
    vals = f.value(x[:, None, :], t[:, None] - d)
    q, e = _quad.integrate(vals, wk, wg)
    return q / alpha, e / alpha


def _distance_range(lo, hi, panels_per_octave=8, width=None):
    """Panels over the distances ``[lo, hi]``: uniform of ``width`` or geometric."""
    active = hi > lo
    lo_a = np.where(active, lo, 1.0)
    hi_a = np.where(active, hi, 2.0)
    if width is not None:
        span = float(np.max(np.where(active, hi - lo, 0.0)))
        count = max(4, int(math.ceil(span / width)))
        edges = _quad.uniform_edges(lo_a, hi_a, count)
    else:
        ratio = float(np.max(np.where(active, hi_a / lo_a, 1.0)))
        count = max(8, int(math.ceil(panels_per_octave * math.log2(max(ratio, 2.0)))))
        edges = _quad.geometric_edges(lo_a, hi_a, count)
    d, wk, wg = _quad.panel_nodes(edges)
    return active, d, wk, wg


def _rl_far(f, x, t, lo, hi, alpha):
    width = f.t_scale if f.is_windowed else None
    active, d, wk, wg = _distance_range(lo, hi, width=width)
    vals = f.value(x[:, None, :], t[:, None] - d) * d ** (alpha - 1)
    q, e = _quad.integrate(vals, wk, wg)
    return np.where(active, q, 0.0), np.where(active, e, 0.0)


def _broadcast(f: TestFunction, t, x):
    t = np.asarray(t, dtype=float)
    if x is None:
        x = np.zeros(t.shape + (f.n,))
    x, t = f.coerce(x, t)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    xs = np.broadcast_to(x, shape + (f.n,)).reshape(-1, f.n)
    ts = np.broadcast_to(t, shape).reshape(-1)
    if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(xs))):
        raise DomainError("evaluation points must be finite")
    return xs, ts, shape


def rl_integral(f: TestFunction, t, params: FractionalParams,
                q: TimeQuadrature | None = None, *, x=None, full_output: bool = False,
                lower: float | None = None):
    """``c_alpha int_{lower}^t f(tau) (t - tau)^(alpha - 1) dtau`` (``lower`` defaults to -infinity).

    Raises :class:`DivergenceError` when ``f`` does not decay fast enough for
    the untruncated integral to exist.
    """
    q = q or TimeQuadrature()
    alpha = params.alpha
    xs, ts, shape = _broadcast(f, t, x)
    value = np.zeros(ts.shape, dtype=complex)
    error = np.zeros(ts.shape)
    if not _is_zero(f):
        if lower is None:
            _check_history_tail(f, alpha)
        chunk = 1024
        for i in range(0, ts.size, chunk):
            sl = slice(i, i + chunk)
            value[sl], error[sl] = _rl_chunk(f, xs[sl], ts[sl], alpha, q, lower)
    value = (params.c_lower_alpha * value).reshape(shape)
    error = (params.c_lower_alpha * error).reshape(shape)
    if not shape:
        value, error = complex(value), float(error)
    if full_output:
        return QuadResult(value, error)
    return value


def _rl_chunk(f, x, t, alpha, q, lower):
    # farthest relevant distance
    reach = np.full(t.shape, np.inf)
    if f.is_windowed:
        reach = t - f.t_window[0]
    if lower is not None:
        reach = np.minimum(reach, t - lower)
    reach = np.maximum(reach, 0.0)
    H = np.minimum(_near_scale(f), reach)
    live = H > 0
    Hs = np.where(live, H, 1.0)

    near, err = _near(f, x, t, Hs, alpha)
    near = np.where(live, near, 0.0)
    err = np.where(live, err, 0.0)

    if f.decay_class == "plane_wave" and lower is None:
        tail = np.zeros(t.shape, dtype=complex)
        for amp, xi, rho in f.modes:
            wave = amp * np.exp(1j * (x @ np.asarray(xi) + rho * t))
            hs, inv = np.unique(Hs, return_inverse=True)
            tails = np.array([_quad.oscillatory_tail(-rho, 1.0 - alpha, float(h)) for h in hs])
            tail += wave * tails[inv]
        return near + tail, err + 1e-14 * np.abs(tail)

    if np.all(np.isfinite(reach)):
        far, e = _rl_far(f, x, t, Hs, np.where(live, reach, Hs), alpha)
        return near + far, err + e

    # untruncated decaying tails: graded panels plus an extrapolated remainder
    if f.decay_class == "exponential_time":
        F = max(q.far_cut, 40.0 / abs(f.exp_rate))
    else:
        F = q.far_cut * max(1.0, float(np.max(np.abs(t))))
    far, e = _rl_far(f, x, t, Hs, np.full(t.shape, F), alpha)
    fF = f.value(x, t - F)
    if f.decay_class == "polynomial":
        rem = fF * F**alpha / (-(f.t_growth) - alpha)
        return near + far + rem, err + e + 0.1 * np.abs(rem)
    return near + far, err + e + np.abs(fF) * F**alpha / alpha


# }}}


# {{{ fractional fundamental theorem


def _with_value(f: TestFunction, fn, name: str) -> TestFunction:
    return dataclasses.replace(f, value=fn, name=name)


def fractional_integral(f: TestFunction, params: FractionalParams,
                        q: TimeQuadrature | None = None) -> TestFunction:
    """``I^alpha f`` as a test function (time derivatives via ``I^alpha f'``, ``I^alpha f''``)."""
    _check_history_tail(f, params.alpha)

    def lift(fn: Callable, tag: str):
        g = _with_value(f, fn, f"{tag}{f.name}")
        return lambda x, t: _rl_values(g, x, t, params, q)

    window = None
    if f.is_windowed:
        window = (f.t_window[0], math.inf)
    return TestFunction(
        name=f"I^{params.alpha}[{f.name}]",
        decay_class=f.decay_class if f.decay_class != "bump_product" else "schwartz",
        n=f.n,
        value=lift(f.value, ""),
        dt=lift(f.dt, "d/dt "),
        dtt=lift(f.dtt, "d2/dt2 "),
        lap=lambda x, t: np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))),
        t_window=window,
        x_center=f.x_center,
        x_radius=f.x_radius,
        t_scale=f.t_scale,
        x_scale=f.x_scale,
        exp_rate=f.exp_rate,
        space_independent=f.space_independent,
        metadata={"integrand": f.name, "alpha": params.alpha},
    )


def _rl_values(g, x, t, params, q):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return rl_integral(g, t, params, q, x=x)


def verify_fftc(f: TestFunction, params: FractionalParams, t_samples: Sequence[float],
                q: TimeQuadrature | None = None) -> VerificationReport:
    """Round trip ``D_left^alpha (I^alpha f) = f`` at the sample times."""
    ts = np.asarray(t_samples, dtype=float)
    record = dict(alpha=params.alpha, function=f.name)
    anchor = "fractional fundamental theorem of calculus"
    x = np.zeros(ts.shape + (f.n,))
    ref = f.value(x, ts)
    scale = 1.0 + float(np.max(np.abs(ref))) if ts.size else 1.0
    tol = 1e-4 * scale
    if _is_zero(f):
        return VerificationReport("fftc", True, 0.0, tol, record, anchor)
    U = fractional_integral(f, params, q)
    got = marchaud(U, ts, params, q, side="left", x=x)
    err = float(np.max(np.abs(got - ref)))
    return VerificationReport("fftc", err <= tol, err, tol, record, anchor,
                              details={"t": ts.tolist(), "max_abs_f": scale - 1.0})


# }}}


# {{{ truncated-history initial value problem


@dataclass(frozen=True)
class HistoryProblem:
    """``D_left^alpha w = rhs`` on ``(a, T]`` with ``w = history`` on ``(-inf, a]``."""

    history: Callable[[np.ndarray], np.ndarray]
    rhs: Callable[[np.ndarray], np.ndarray]
    a: float
    T: float
    steps: int
    alpha: float
    history_start: float | None = None
    """History vanishes below this time (``None``: it extends to -infinity)."""
    tol: float | None = None

    def __post_init__(self) -> None:
        if not self.a < self.T:
            raise DomainError("need a < T")
        if self.steps < 8:
            raise DomainError(f"steps must be >= 8, got {self.steps}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.history_start is not None and self.history_start > self.a:
            raise DomainError("history_start must not exceed a")


@dataclass
class HistorySolution:
    t: np.ndarray
    w: np.ndarray
    error_estimate: float
    """``|w_M(T) - w_2M(T)|`` from a step-halving rerun."""
    steps: int


def _history_tail(p: HistoryProblem, tk: np.ndarray) -> np.ndarray:
    """``int_{-inf}^a h(tau) (t_k - tau)^(-1-alpha) dtau`` for each ``t_k > a``."""
    alpha = p.alpha
    d0 = tk - p.a
    if p.history_start is not None:
        d1 = tk - p.history_start
        live = d1 > d0
        d1 = np.where(live, d1, 2 * d0)
    else:
        F = 1e6 * max(1.0, p.T - p.a)
        d1 = np.full(tk.shape, F)
        live = np.ones(tk.shape, dtype=bool)
    count = max(16, int(math.ceil(8 * math.log2(float(np.max(d1 / d0))))))
    d, wk, _ = _quad.panel_nodes(_quad.geometric_edges(d0, d1, count))
    vals = np.asarray(p.history(tk[:, None] - d), dtype=float) * d ** (-1 - alpha)
    out = np.where(live, np.sum(vals * wk, axis=-1), 0.0)
    if p.history_start is None:
        # beyond F the history is taken constant at its value there
        hF = np.asarray(p.history(tk - d1), dtype=float)
        hH = np.asarray(p.history(tk - d1 / 2), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            growth = np.where(np.abs(hH) > 0, np.log2(np.abs(hF) / np.abs(hH)), 0.0)
        if np.any(growth >= alpha - 1e-3):
            raise DivergenceError("history grows too fast toward -infinity")
        out = out + hF * d1 ** (-alpha) / alpha
    return out


def _march(p: HistoryProblem, M: int) -> tuple[np.ndarray, np.ndarray]:
    alpha = p.alpha
    c_upper = 1.0 / abs(gamma_fn(-alpha))
    h = (p.T - p.a) / M
    t = p.a + h * np.arange(M + 1)
    w = np.zeros(M + 1)
    w[0] = float(p.history(np.array(p.a)))
    Hk = _history_tail(p, t[1:])
    f = np.asarray(p.rhs(t[1:]), dtype=float) * np.ones(M)
    diag = h ** (-alpha) * (1.0 / alpha + 1.0 / (1.0 - alpha))
    last = h ** (-alpha) / (1.0 - alpha)

    # product-integration weights of the linear interpolant on cell j = [t_{j-1}, t_j]
    # at distance m = k - j cells from the newest node
    m = np.arange(1, M)
    d1 = m * h
    d2 = d1 + h
    W = (d1 ** (-alpha) - d2 ** (-alpha)) / alpha
    A = ((d2 ** (1 - alpha) - d1 ** (1 - alpha)) / (1 - alpha) - d1 * W) / h  # left endpoint
    B = W - A  # right endpoint

    for k in range(1, M + 1):
        acc = f[k - 1] / c_upper + Hk[k - 1] + w[k - 1] * last
        if k > 1:
            j = np.arange(1, k)  # cells 1..k-1
            mm = k - j - 1
            acc += np.dot(B[mm], w[j]) + np.dot(A[mm], w[j - 1])
        w[k] = acc / diag
    return t, w


def solve_history_ivp(p: HistoryProblem) -> HistorySolution:
    """March ``D_left^alpha w = rhs`` on a uniform grid of ``p.steps`` steps.

    The newest value solves a scalar linear relation in which every other
    contribution enters with a positive weight, so nonnegative data give a
    nonnegative solution and constants are reproduced exactly.
    """
    t, w = _march(p, p.steps)
    _, w2 = _march(p, 2 * p.steps)
    err = abs(w[-1] - w2[-1])
    if p.tol is not None and err > p.tol:
        raise NonConvergenceError(f"step-halving change {err:.3e} exceeds tol {p.tol:.3e}")
    return HistorySolution(t, w, float(err), p.steps)


def max_principle_check(p: HistoryProblem, *, diagnostic: bool = False,
                        samples: int = 2048) -> VerificationReport:
    """Nonnegativity of the marching solution for nonnegative history and zero forcing."""
    lo = p.history_start if p.history_start is not None else p.a - 1e3 * (p.T - p.a)
    probe = np.linspace(lo, p.a, samples)
    hmin = float(np.min(p.history(probe)))
    if hmin < 0 and not diagnostic:
        raise DomainError(f"history takes the negative value {hmin:.3e}")
    tk = np.linspace(p.a, p.T, 64)
    if np.any(np.asarray(p.rhs(tk)) != 0):
        raise DomainError("the maximum principle check needs zero forcing")
    sol = solve_history_ivp(p)
    wmin = float(np.min(sol.w))
    return VerificationReport(
        "max_principle", wmin >= -1e-10, wmin, -1e-10,
        dict(alpha=p.alpha, a=p.a, T=p.T, steps=p.steps),
        "maximum principle for the left Marchaud derivative",
        details={"history_min": hmin, "error_estimate": sol.error_estimate,
                 "diagnostic": diagnostic},
    )


def random_history_problem(rng: np.random.Generator, alpha: float, *, a: float = 0.0,
                           T: float = 2.0, steps: int = 256) -> HistoryProblem:
    """Nonnegative history (a constant plus bumps on ``[a - 4, a]``) with zero forcing."""
    c = float(rng.uniform(0.0, 1.0)) if rng.uniform() < 0.5 else 0.0
    k = int(rng.integers(1, 4))
    centers = rng.uniform(a - 3.0, a, k)
    widths = rng.uniform(0.3, 1.0, k)
    amps = rng.uniform(0.0, 2.0, k)

    def history(tau, c=c, centers=centers, widths=widths, amps=amps):
        tau = np.asarray(tau, dtype=float)
        y = (tau[..., None] - centers) / widths
        inside = np.abs(y) < 1
        b = np.where(inside, np.exp(1 - 1 / np.where(inside, 1 - y * y, 1.0)), 0.0)
        return c + np.sum(amps * b, axis=-1)

    return HistoryProblem(history, lambda t: np.zeros_like(np.asarray(t, dtype=float)), a, T,
                          steps, alpha, history_start=None if c > 0 else a - 4.0)


# }}}


# {{{ truncation and divergence


@dataclass
class TruncationReport:
    R: list[float]
    values: list[float]
    monotone: bool
    limit: float | None
    converged: bool | None
    growth_exponent: float | None
    divergent: bool
    details: dict = field(default_factory=dict)


def truncated_values(f: TestFunction, t: float, params: FractionalParams,
                     R_list: Sequence[float], q: TimeQuadrature | None = None) -> np.ndarray:
    """``v_R(t) = c_alpha int_{-R}^t f (t - tau)^(alpha-1) dtau`` for increasing ``R``.

    Each value adds the nonnegative contribution of ``[-R_k, -R_{k-1}]`` to
    the previous one, so monotonicity for ``f >= 0`` holds up to roundoff.
    """
    R = np.asarray(R_list, dtype=float)
    if np.any(np.diff(R) <= 0) or np.any(R <= -t):
        raise DomainError("R_list must increase with every R > -t")
    first = rl_integral(f, t, params, q, lower=-float(R[0]))
    out = [float(np.real(first))]
    x = np.zeros((1, f.n))
    for r_prev, r in zip(R[:-1], R[1:]):
        lo = np.array([t + r_prev])
        hi = np.array([t + r])
        if f.is_windowed:
            hi = np.minimum(hi, t - f.t_window[0])
        if hi[0] > lo[0]:
            far, _ = _rl_far(f, x, np.array([t]), lo, hi, params.alpha)
            inc = params.c_lower_alpha * float(np.real(far[0]))
        else:
            inc = 0.0
        out.append(out[-1] + inc)
    return np.array(out)


def truncation_convergence(f: TestFunction, t: float, params: FractionalParams,
                           R_list: Sequence[float], q: TimeQuadrature | None = None
                           ) -> TruncationReport:
    vals = truncated_values(f, t, params, R_list, q)
    R = np.asarray(R_list, dtype=float)
    monotone = bool(np.all(np.diff(vals) >= -1e-12))
    try:
        limit = float(np.real(rl_integral(f, t, params, q)))
    except DivergenceError as exc:
        pos = vals > 0
        growth = None
        if np.sum(pos) >= 2:
            growth = float(np.polyfit(np.log(R[pos]), np.log(vals[pos]), 1)[0])
        return TruncationReport(R.tolist(), vals.tolist(), monotone, None, None, growth, True,
                                details={"reason": str(exc)})
    converged = bool(abs(vals[-1] - limit) <= 1e-6 * max(1.0, abs(limit)))
    return TruncationReport(R.tolist(), vals.tolist(), monotone, limit, converged, None, False)


def c0_divergence_demo(params: FractionalParams, t: float = 0.0, threshold_c1: float = 1.0,
                       bound_c2: float = 1.0, R_list: Sequence[float] = (10.0, 100.0, 1000.0),
                       q: TimeQuadrature | None = None) -> VerificationReport:
    """A positive constant lower bound makes the fractional integral infinite.

    The truncated integrals of ``bound_c2`` grow like ``R^alpha``; the fitted
    exponent must match ``alpha`` to within 0.05.
    """
    from .functions import constant

    if threshold_c1 <= 0 or bound_c2 < 0:
        raise DomainError("need threshold_c1 > 0 and bound_c2 >= 0")
    record = dict(alpha=params.alpha, t=t, c1=threshold_c1, c2=bound_c2)
    anchor = "a positive lower bound forces the history integral to diverge"
    if bound_c2 == 0:
        return VerificationReport("c0_divergence", True, 0.0, 0.05, record, anchor,
                                  applicable=False,
                                  details={"reason": "C2 = 0: truncated integrals vanish"})
    rep = truncation_convergence(constant(bound_c2), t, params, R_list, q)
    p = rep.growth_exponent
    gap = abs(p - params.alpha) if p is not None else math.inf
    exact = [params.c_lower_alpha * bound_c2 * (t + r) ** params.alpha / params.alpha
             for r in R_list]
    checks = [
        CheckResult("divergent", rep.divergent, rep.divergent, True),
        CheckResult("monotone", rep.monotone, rep.monotone, True),
        CheckResult("growth_exponent", gap <= 0.05, p, 0.05),
    ]
    return VerificationReport("c0_divergence", all(c.passed for c in checks), gap, 0.05, record,
                              anchor, details={"values": rep.values, "closed_form": exact,
                                               "growth_exponent": p},
                              checks=checks)


# }}}
