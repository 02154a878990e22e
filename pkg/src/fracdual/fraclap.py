"""Fractional Laplacian: direct singular quadrature and periodic spectral multiplier."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from . import _quad
from .core import (
    DomainError,
    FractionalParams,
    SampledField,
    TailDivergenceError,
)
from .functions import TestFunction
from .marchaud import QuadResult


class AliasingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SpaceQuadrature:
    near_cut: float = 1e-3
    mid_cut: float = 1.0
    far_cut: float = 1e4
    radial_nodes: int = 16
    """Graded radial panels on ``[near_cut, mid_cut]`` (15 nodes each)."""
    angular_nodes: int = 24
    tail_model: str = "algebraic_extrapolation"

    def __post_init__(self) -> None:
        if not (0 < self.near_cut < self.mid_cut < self.far_cut):
            raise DomainError("need 0 < near_cut < mid_cut < far_cut")
        if self.radial_nodes < 16 or self.angular_nodes < 16:
            raise DomainError("node counts must be >= 16")
        if self.tail_model not in ("zero_beyond", "algebraic_extrapolation"):
            raise DomainError(f"unknown tail model {self.tail_model!r}")


def frac_laplacian_direct(u: TestFunction, x, params: FractionalParams,
                          q: SpaceQuadrature | None = None, *, t=0.0,
                          full_output: bool = False):
    """``C_{n,s} P.V. int (u(x) - u(y)) / |x - y|^{n+2s} dy`` at ``(x, t)``.

    Evaluated in the symmetrized second-difference form; far fields use the
    declared support of ``u`` (windowed classes), exact oscillatory tails
    (plane waves) or symmetric truncation with an extrapolated remainder.
    """
    q = q or SpaceQuadrature()
    if u.n != params.n:
        raise DomainError(f"function lives in R^{u.n} but params have n = {params.n}")
    x, t = u.coerce(x, t)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    xs = np.broadcast_to(x, shape + (u.n,)).reshape(-1, u.n)
    ts = np.broadcast_to(t, shape).reshape(-1)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ts))):
        raise DomainError("evaluation points must be finite")

    value = np.zeros(ts.shape, dtype=complex)
    error = np.zeros(ts.shape)
    conditional = False
    if not u.space_independent:
        conditional = _is_conditional(u, params)
        chunk = 1024 if u.n == 1 else 16
        for i in range(0, ts.size, chunk):
            sl = slice(i, i + chunk)
            value[sl], error[sl] = _chunk(u, xs[sl], ts[sl], params, q)

    value = (params.c_ns * value).reshape(shape)
    error = (params.c_ns * error).reshape(shape)
    if not shape:
        value, error = complex(value), float(error)
    if full_output:
        return QuadResult(value, error, conditional)
    return value


def _is_conditional(u: TestFunction, params: FractionalParams) -> bool:
    # x_1 with 2s <= 1: only the symmetric truncation converges
    return (u.decay_class in ("polynomial",) and u.x_growth is not None
            and u.x_growth >= 2 * params.s)


def _chunk(u, x, t, params, q):
    n, s = params.n, params.s
    # resolve features of size x_scale on the sphere of radius mid_cut
    dirs, wdir = _quad.half_sphere_rule(
        n, max(q.angular_nodes, int(math.ceil(4 * q.mid_cut / u.x_scale))))
    half_area = 0.5 * _quad.sphere_area(n)
    delta, B = q.near_cut, q.mid_cut

    u0 = u.value(x, t)
    lap = u.lap(x, t)
    near = -half_area * lap / n * delta ** (2 - 2 * s) / (2 - 2 * s)
    err_near = np.abs(lap) * delta ** (4 - 2 * s) / ((4 - 2 * s) * u.x_scale**2)

    r, wk, wg = _quad.panel_nodes(_quad.geometric_edges(np.array(delta), np.array(B),
                                                        q.radial_nodes))
    mid, err_mid = _second_difference(u, x, t, u0, dirs, wdir, r, wk, wg, s)

    if u.decay_class == "plane_wave":
        far, err_far = _plane_wave_far(u, x, t, u0, B, params)
    elif u.is_windowed and u.x_radius is not None and math.isfinite(u.x_radius):
        far, err_far = _windowed_far(u, x, t, u0, B, params, q)
    else:
        far, err_far = _symmetric_far(u, x, t, u0, B, dirs, wdir, params, q)

    value = near + mid + far
    roundoff = 1e-15 * (np.abs(u0) * 2 * half_area * B ** (-2 * s) / (2 * s)
                        + np.abs(mid) + np.abs(far))
    return value, err_near + err_mid + err_far + roundoff


def _second_difference(u, x, t, u0, dirs, wdir, r, wk, wg, s):
    """``int_{S_half} int (2u(x) - u(x + r th) - u(x - r th)) r^(-1-2s) dr dth``."""
    # points (P, D, R, n)
    disp = dirs[None, :, None, :] * r[None, None, :, None]
    xp = x[:, None, None, :]
    tt = t[:, None, None]
    sym = u.value(xp + disp, tt) + u.value(xp - disp, tt)
    vals = (2.0 * u0[:, None, None] - sym) * r ** (-1 - 2 * s)
    q, e = _quad.integrate(vals, wk, wg)
    return q @ wdir, e @ wdir


def _windowed_far(u, x, t, u0, B, params, q):
    """``u(x) |S| B^-2s / 2s - int_{|z| > B} u(x + z) |z|^(-n-2s) dz``."""
    n, s = params.n, params.s
    head = u0 * _quad.sphere_area(n) * B ** (-2 * s) / (2 * s)
    c = np.asarray(u.x_center, dtype=float)
    W = float(u.x_radius)
    count = max(4, int(math.ceil(2 * W / u.x_scale)))

    if n == 1:
        xx = x[:, 0]
        total = np.zeros(xx.shape, dtype=complex)
        err = np.zeros(xx.shape)
        for lo, hi in (
            (np.full(xx.shape, c[0] - W), np.minimum(c[0] + W, xx - B)),
            (np.maximum(c[0] - W, xx + B), np.full(xx.shape, c[0] + W)),
        ):
            active = hi > lo
            if not np.any(active):
                continue
            y, wk, wg = _quad.panel_nodes(_quad.uniform_edges(
                np.where(active, lo, 0.0), np.where(active, hi, 1.0), count))
            vals = u.value(y[..., None], t[:, None]) * np.abs(xx[:, None] - y) ** (-1 - 2 * s)
            qk, e = _quad.integrate(vals, wk, wg)
            total += np.where(active, qk, 0.0)
            err += np.where(active, e, 0.0)
        return head - total, err

    cone_nodes = max(q.angular_nodes, int(math.ceil(2 * W / u.x_scale)))
    dirs, wdir = _cone_rule(x, c, W, n, cone_nodes, q.angular_nodes)  # (P, D, n), (P, D)
    rel = c - x  # (P, n)
    p = np.einsum("pdn,pn->pd", dirs, rel)
    d2 = np.sum(rel**2, axis=-1)[:, None]
    disc = W**2 - (d2 - p**2)
    root = np.sqrt(np.maximum(disc, 0.0))
    lo = np.maximum(B, p - root)
    hi = p + root
    active = (disc > 0) & (hi > lo)
    lo_a = np.where(active, lo, 0.0)
    hi_a = np.where(active, hi, 1.0)
    rr, wk, wg = _quad.panel_nodes(_quad.uniform_edges(lo_a, hi_a, count))  # (P, D, R)
    pts = x[:, None, None, :] + dirs[:, :, None, :] * rr[..., None]
    vals = u.value(pts, t[:, None, None]) * rr ** (-1 - 2 * s)
    qk, e = _quad.integrate(vals, wk, wg)
    qk = np.where(active, qk, 0.0)
    e = np.where(active, e, 0.0)
    return head - np.sum(qk * wdir, axis=-1), np.sum(e * wdir, axis=-1)


def _cone_rule(x, c, W, n, angular_nodes, azimuth_nodes):
    """Directions from each ``x`` covering the ball ``B(c, W)``, with weights."""
    P = x.shape[0]
    rel = c - x
    d = np.linalg.norm(rel, axis=-1)
    inside = d <= W * (1 + 1e-12)
    axis = np.where(inside[:, None], np.eye(n)[0], rel / np.where(d > 0, d, 1.0)[:, None])
    beta = np.where(inside, np.pi, np.arcsin(np.clip(W / np.where(d > 0, d, 1.0), 0, 1)))
    frame = _quad.orthonormal_frame(axis)  # (P, n, n), first row = axis

    if n == 2:
        m = 4 * angular_nodes
        xg, wg = np.polynomial.legendre.leggauss(m)
        # cone: Gauss-Legendre in the angle; full circle: trapezoid
        psi_c = beta[:, None] * xg
        w_c = beta[:, None] * wg
        psi_f = np.broadcast_to(-np.pi + 2 * np.pi * np.arange(m) / m, (P, m))
        w_f = np.full((P, m), 2 * np.pi / m)
        psi = np.where(inside[:, None], psi_f, psi_c)
        w = np.where(inside[:, None], w_f, w_c)
        local = np.stack([np.cos(psi), np.sin(psi)], axis=-1)
    else:
        mp, ma = angular_nodes, azimuth_nodes
        xg, wg = np.polynomial.legendre.leggauss(mp)
        # polar angle on [0, beta] in cos(psi), azimuth trapezoid
        cb = np.cos(beta)
        cpsi = 0.5 * (1 + cb)[:, None] + 0.5 * (1 - cb)[:, None] * xg
        wc = 0.5 * (1 - cb)[:, None] * wg
        ph = 2 * np.pi * np.arange(ma) / ma
        spsi = np.sqrt(np.maximum(1 - cpsi**2, 0.0))
        local = np.stack([
            np.broadcast_to(cpsi[:, :, None], (P, mp, ma)),
            spsi[:, :, None] * np.cos(ph),
            spsi[:, :, None] * np.sin(ph),
        ], axis=-1).reshape(P, mp * ma, 3)
        w = (wc[:, :, None] * np.full(ma, 2 * np.pi / ma)).reshape(P, mp * ma)
    dirs = np.einsum("pdk,pkn->pdn", local, frame)
    return dirs, w


def _symmetric_far(u, x, t, u0, B, dirs, wdir, params, q):
    """Symmetric truncation on ``[B, far_cut]`` with an extrapolated remainder."""
    s = params.s
    F = q.far_cut
    r, wk, wg = _quad.panel_nodes(_quad.geometric_edges(np.array(B), np.array(F), 48))
    total, err = _second_difference(u, x, t, u0, dirs, wdir, r, wk, wg, s)

    def sym(radius):
        disp = dirs[None, :, :] * radius
        return u.value(x[:, None, :] + disp, t[:, None]) + u.value(x[:, None, :] - disp, t[:, None])

    sF, sH = sym(F), sym(F / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(np.abs(sH) > 0, np.log2(np.abs(sF) / np.abs(sH)), 0.0)
    p = np.where(np.isfinite(p), p, 0.0)
    # cancellation of the symmetric sum to ~ 2 u(x) means p ~ 0 for affine data
    if np.any(p >= 2 * s - 1e-3):
        raise TailDivergenceError(
            f"{u.name}: symmetric sum grows like r^{float(np.max(p)):.3g} >= r^(2s); "
            "the fractional Laplacian diverges")
    tail = (2.0 * u0[:, None] * F ** (-2 * s) / (2 * s) - sF * F ** (-2 * s) / (2 * s - p))
    if q.tail_model == "zero_beyond":
        tail = 2.0 * (u0[:, None] - 0.5 * sF) * F ** (-2 * s) / (2 * s)
    tail = tail @ wdir
    return total + tail, err + 1e-3 * np.abs(tail)


def _plane_wave_far(u, x, t, u0, B, params):
    n, s = params.n, params.s
    area = _quad.sphere_area(n)
    acc = np.zeros(t.shape, dtype=complex)
    for amp, xi, rho in u.modes:
        k = float(np.linalg.norm(xi))
        wave = amp * np.exp(1j * (x @ np.asarray(xi) + rho * t))
        acc += wave * (area * B ** (-2 * s) / (2 * s) - _sphere_wave_tail(n, s, k, B))
    return acc, 1e-13 * np.abs(u0) * area * B ** (-2 * s) / (2 * s)


@lru_cache(maxsize=1024)
def _sphere_wave_tail(n: int, s: float, k: float, B: float) -> float:
    """``int_B^inf r^(-1-2s) int_{S^{n-1}} exp(i k r th_1) dth dr``."""
    if k == 0.0:
        return _quad.sphere_area(n) * B ** (-2 * s) / (2 * s)
    if n == 1:
        return 2.0 * _quad.oscillatory_tail(k, 1 + 2 * s, B).real
    if n == 3:
        return 4 * np.pi / k * _quad.oscillatory_tail(k, 2 + 2 * s, B).imag
    val = mpmath.quadosc(lambda r: r ** (-1 - 2 * s) * mpmath.besselj(0, k * r),
                         [B, mpmath.inf], omega=k)
    return float(2 * np.pi * val)


# {{{ spectral route


def spatial_wavenumbers(grid) -> list[np.ndarray]:
    N, dx = grid.points_per_axis, grid.dx
    return [2 * np.pi * np.fft.fftfreq(N, dx)] * grid.n


def frac_laplacian_spectral(field: SampledField, params: FractionalParams) -> SampledField:
    """Apply ``|xi|^{2s}`` in Fourier space, slice by slice in time."""
    grid = field.grid
    if grid.n != params.n:
        raise DomainError(f"grid has n = {grid.n} but params have n = {params.n}")
    axes = tuple(range(grid.n))
    fhat = np.fft.fftn(field.values, axes=axes)
    k = np.meshgrid(*spatial_wavenumbers(grid), indexing="ij")
    kmag = np.sqrt(sum(ki**2 for ki in k))
    _check_aliasing(fhat, kmag, grid)
    mult = (kmag ** (2 * params.s))[(...,) + (None,)]
    out = np.fft.ifftn(fhat * mult, axes=axes)
    return SampledField(grid, out)


def _check_aliasing(fhat: np.ndarray, kmag: np.ndarray, grid) -> float:
    power = np.sum(np.abs(fhat) ** 2, axis=-1)
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    kmax = np.pi / grid.dx
    top = float(np.sum(power[kmag > 0.5 * kmax])) / total
    if top > 1e-8:
        warnings.warn(f"top-octave spectral mass {top:.2e} exceeds 1e-8; "
                      "the field is under-resolved or not periodic", AliasingWarning,
                      stacklevel=3)
    return top


def periodic_image_sum(u: TestFunction, x, params: FractionalParams, L: float,
                       q: SpaceQuadrature | None = None, *, t=0.0, images: int = 64) -> complex:
    """``sum_{m != 0} (-Delta)^s u(x + 2 L m)`` for ``n = 1``.

    The difference between the spectral route on ``[-L, L)`` and the whole-line
    operator; images beyond ``|m| > images`` use the monopole far field.
    """
    if params.n != 1:
        raise DomainError("periodic image sums are implemented for n = 1")
    x0 = float(np.ravel(x)[0])
    m = np.concatenate([np.arange(-images, 0), np.arange(1, images + 1)])
    vals = frac_laplacian_direct(u, x0 + 2 * L * m, params, q, t=np.full(m.shape, t))
    c = float(u.x_center[0])
    W = float(u.x_radius)
    y, wk, _ = _quad.panel_nodes(_quad.uniform_edges(np.array(c - W), np.array(c + W),
                                                     max(4, int(2 * W / u.x_scale))))
    mass = np.sum(u.value(y[:, None], np.full(y.shape, t)) * wk)
    rest = 2 * special.zeta(1 + 2 * params.s, images + 1) / (2 * L) ** (1 + 2 * params.s)
    return complex(np.sum(vals) - params.c_ns * mass * rest)


# }}}
