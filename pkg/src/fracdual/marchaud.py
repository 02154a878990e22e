"""Left and right Marchaud derivatives by regularized singular quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _quad
from .core import DomainError, FractionalParams, TailDivergenceError
from .functions import TestFunction

SIDES = ("left", "right")


@dataclass(frozen=True)
class TimeQuadrature:
    near_cut: float | None = None
    """Taylor-regularized radius; ``None`` means ``1e-3 * max(1, |t|)``."""
    far_cut: float = 50.0
    near_order: int = 2
    tail_model: str = "zero_beyond"
    mid_panels: int = 16
    far_panels: int = 40
    chunk: int = 2048

    def __post_init__(self) -> None:
        if self.near_order not in (1, 2):
            raise DomainError(f"near_order must be 1 or 2, got {self.near_order}")
        if self.tail_model not in ("zero_beyond", "algebraic_extrapolation"):
            raise DomainError(f"unknown tail model {self.tail_model!r}")
        if self.near_cut is not None and not (0 < self.near_cut < self.far_cut):
            raise DomainError("need 0 < near_cut < far_cut")

    def delta(self, t: np.ndarray) -> np.ndarray:
        if self.near_cut is not None:
            return np.full(np.shape(t), float(self.near_cut))
        return 1e-3 * np.maximum(1.0, np.abs(t))


class QuadResult(NamedTuple):
    value: np.ndarray
    error: np.ndarray
    conditional: bool = False


def time_symbol(rho, alpha: float, side: str = "left"):
    """Principal branch of ``(i rho)^alpha`` (left) or ``(-i rho)^alpha`` (right)."""
    if side not in SIDES:
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    rho = np.asarray(rho, dtype=float)
    sgn = 1.0 if side == "left" else -1.0
    out = np.abs(rho) ** alpha * np.exp(sgn * 1j * alpha * 0.5 * np.pi * np.sign(rho))
    return out if out.ndim else complex(out)


def _broadcast_points(u: TestFunction, t, x) -> tuple[np.ndarray, np.ndarray, tuple]:
    t = np.asarray(t, dtype=float)
    if x is None:
        x = np.zeros(t.shape + (u.n,))
    x, t = u.coerce(x, t)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    x = np.broadcast_to(x, shape + (u.n,)).reshape(-1, u.n)
    t = np.broadcast_to(t, shape).reshape(-1)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
        raise DomainError("evaluation points must be finite")
    return x, t, shape


def marchaud(u: TestFunction, t, params: FractionalParams,
             q: TimeQuadrature | None = None, *, side: str = "left", x=None,
             full_output: bool = False):
    """Marchaud derivative of order ``params.alpha`` in time at ``(x, t)``.

    ``side='left'`` integrates over the past, ``side='right'`` over the future.
    With ``full_output`` a :class:`QuadResult` carrying an error estimate is
    returned instead of the bare value.
    """
    if side not in SIDES:
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    q = q or TimeQuadrature()
    xs, ts, shape = _broadcast_points(u, t, x)

    value = np.zeros(ts.shape, dtype=complex)
    error = np.zeros(ts.shape)
    if not u.time_independent:
        for i in range(0, ts.size, q.chunk):
            sl = slice(i, i + q.chunk)
            value[sl], error[sl] = _marchaud_chunk(u, xs[sl], ts[sl], params, q, side)

    value = params.c_upper_alpha * value
    error = params.c_upper_alpha * error
    value = value.reshape(shape)
    error = error.reshape(shape)
    if not shape:
        value, error = complex(value), float(error)
    if full_output:
        return QuadResult(value, error)
    return value


def marchaud_left(u, t, params, q=None, *, x=None, full_output=False):
    return marchaud(u, t, params, q, side="left", x=x, full_output=full_output)


def marchaud_right(u, t, params, q=None, *, x=None, full_output=False):
    return marchaud(u, t, params, q, side="right", x=x, full_output=full_output)


def _marchaud_chunk(u: TestFunction, x: np.ndarray, t: np.ndarray,
                    params: FractionalParams, q: TimeQuadrature, side: str):
    alpha = params.alpha
    sgn = -1.0 if side == "left" else 1.0
    _check_tail(u, alpha, side)

    delta = q.delta(t)
    B = np.maximum(1.0, 10.0 * delta)
    u0 = u.value(x, t)
    u1 = u.dt(x, t)

    # near segment: u(t) - u(t + sgn s) = -sgn u' s - u'' s^2 / 2 + O(s^3)
    near = -sgn * u1 * delta ** (1 - alpha) / (1 - alpha)
    if q.near_order == 2:
        u2 = u.dtt(x, t)
        near = near - u2 * delta ** (2 - alpha) / (2 * (2 - alpha))
        err_near = np.abs(u2) * delta ** (3 - alpha) / ((3 - alpha) * u.t_scale)
    else:
        err_near = np.abs(u1) * delta ** (2 - alpha) / ((2 - alpha) * u.t_scale)

    # mid segment [delta, B] in difference form on graded panels
    s, wk, wg = _quad.panel_nodes(_quad.geometric_edges(delta, B, q.mid_panels))
    tn = t[:, None] + sgn * s
    integrand = (u0[:, None] - u.value(x[:, None, :], tn)) * s ** (-1 - alpha)
    mid, err_mid = _quad.integrate(integrand, wk, wg)

    far, err_far = _far_field(u, x, t, u0, B, params, q, sgn)

    value = near + mid + far
    roundoff = 1e-15 * (np.abs(u0) * B ** (-alpha) / alpha + np.abs(mid) + np.abs(far))
    return value, err_near + err_mid + err_far + roundoff


def _check_tail(u: TestFunction, alpha: float, side: str) -> None:
    if u.decay_class == "exponential_time":
        lam = u.exp_rate
        if (side == "left" and lam < 0) or (side == "right" and lam > 0):
            raise TailDivergenceError(
                f"exp({lam} t) grows toward {'-' if side == 'left' else '+'}infinity; "
                f"the {side} Marchaud integral diverges")
    elif u.decay_class == "polynomial":
        if u.t_growth is not None and u.t_growth >= alpha:
            raise TailDivergenceError(
                f"{u.name} grows like |t|^{u.t_growth} with exponent >= alpha = {alpha}")


def _far_field(u: TestFunction, x, t, u0, B, params, q, sgn):
    """``u(t) B^-a / a - int_B^inf u(t + sgn s) s^(-1-a) ds`` per point."""
    alpha = params.alpha
    head = u0 * B ** (-alpha) / alpha

    if u.decay_class == "plane_wave":
        acc = np.zeros(t.shape, dtype=complex)
        for amp, xi, rho in u.modes:
            wave = amp * np.exp(1j * (x @ np.asarray(xi) + rho * t))
            ub, inv = np.unique(B, return_inverse=True)
            tails = np.array([_quad.oscillatory_tail(sgn * rho, 1 + alpha, float(b)) for b in ub])
            acc += wave * tails[inv]
        return head - acc, 1e-14 * np.abs(head)

    if u.t_window is not None and u.decay_class != "exponential_time":
        a, b = u.t_window
        if sgn < 0:
            lo = np.full(t.shape, a)
            hi = np.minimum(b, t - B)
        else:
            lo = np.maximum(a, t + B)
            hi = np.full(t.shape, b)
        lo = np.where(np.isfinite(lo), lo, hi)
        active = hi > lo
        if not np.any(active):
            return head, np.zeros(t.shape)
        span = float(np.max(np.where(active, hi - lo, 0.0)))
        count = max(4, int(math.ceil(span / u.t_scale)))
        lo_a = np.where(active, lo, 0.0)
        hi_a = np.where(active, hi, 1.0)
        tau, wk, wg = _quad.panel_nodes(_quad.uniform_edges(lo_a, hi_a, count))
        kern = np.abs(t[:, None] - tau) ** (-1 - alpha)
        vals = u.value(x[:, None, :], tau) * kern
        tail, err = _quad.integrate(vals, wk, wg)
        tail = np.where(active, tail, 0.0)
        err = np.where(active, err, 0.0)
        return head - tail, err

    # exponential or algebraically decaying: graded panels in s out to a far cut
    if u.decay_class == "exponential_time":
        F = max(q.far_cut, 40.0 / abs(u.exp_rate))
    else:
        F = q.far_cut
    F = np.maximum(F, 2.0 * B)
    s, wk, wg = _quad.panel_nodes(_quad.geometric_edges(B, F, q.far_panels))
    vals = u.value(x[:, None, :], t[:, None] + sgn * s) * s ** (-1 - alpha)
    tail, err = _quad.integrate(vals, wk, wg)
    uF = u.value(x, t + sgn * F)
    remainder = uF * F ** (-alpha) / alpha
    if u.decay_class == "polynomial" and q.tail_model == "algebraic_extrapolation":
        # |u(t + sgn s)| ~ (s / F)^p beyond F
        tail = tail + uF * F ** (-alpha) / (alpha - (u.t_growth or 0.0))
        return head - tail, err + 0.1 * np.abs(remainder)
    return head - tail, err + np.abs(remainder)
