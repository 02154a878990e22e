"""Vectorized panel quadrature helpers (Gauss-Kronrod 7-15, sphere rules)."""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

# QUADPACK qk15 abscissae (nonnegative half) and weights
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

#: nodes on [-1, 1], Kronrod weights, embedded Gauss weights (0 off-Gauss)
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg_full = np.zeros(8)
_wg_full[[1, 3, 5]] = _WG[:3]
_wg_full[7] = _WG[3]
GAUSS = np.concatenate([_wg_full[:-1], _wg_full[::-1]])


def panel_nodes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map the 15-point rule onto panels.

    ``edges`` has shape ``(..., P + 1)``; returns nodes, Kronrod weights and
    Gauss weights of shape ``(..., P * 15)``.
    """
    a = edges[..., :-1, None]
    b = edges[..., 1:, None]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid + half * NODES
    wk = half * KRONROD
    wg = half * GAUSS
    shape = edges.shape[:-1] + (-1,)
    return x.reshape(shape), wk.reshape(shape), wg.reshape(shape)


def integrate(values: np.ndarray, wk: np.ndarray, wg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum over the last axis; error is the Kronrod-Gauss discrepancy."""
    qk = np.sum(values * wk, axis=-1)
    qg = np.sum(values * wg, axis=-1)
    return qk, np.abs(qk - qg)


def geometric_edges(lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    """``count`` geometrically graded panels between ``lo > 0`` and ``hi``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s = np.linspace(0.0, 1.0, count + 1)
    ratio = np.log(hi / lo)
    return lo[..., None] * np.exp(ratio[..., None] * s)


def uniform_edges(lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s = np.linspace(0.0, 1.0, count + 1)
    return lo[..., None] + (hi - lo)[..., None] * s


@lru_cache(maxsize=65536)
def oscillatory_tail(omega: float, p: float, lo: float) -> complex:
    """``int_lo^inf exp(i omega s) s^(-p) ds`` for ``p > 0``, ``lo > 0``.

    Closed form ``(-i omega)^(p-1) Gamma(1-p, -i omega lo)`` (contour rotated
    onto the imaginary axis); ``omega = 0`` needs ``p > 1``.
    """
    if omega == 0.0:
        if p <= 1:
            raise ArithmeticError("non-oscillatory tail with p <= 1 diverges")
        return lo ** (1.0 - p) / (p - 1.0)
    z = mpmath.mpc(0, -omega)
    return complex(mpmath.power(z, p - 1) * mpmath.gammainc(1 - p, z * lo))


# {{{ sphere rules


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def half_sphere_rule(n: int, angular_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights covering half of S^{n-1} (one of each +-pair)."""
    if n == 1:
        return np.array([[1.0]]), np.array([1.0])
    if n == 2:
        th = np.pi * np.arange(angular_nodes) / angular_nodes
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return dirs, np.full(angular_nodes, np.pi / angular_nodes)
    # n == 3: Gauss-Legendre in cos(polar) on [0, 1], trapezoid in azimuth
    m = max(angular_nodes // 2, 4)
    xg, wg = np.polynomial.legendre.leggauss(m)
    c = 0.5 * (xg + 1.0)
    wc = 0.5 * wg
    ph = 2.0 * np.pi * np.arange(angular_nodes) / angular_nodes
    C, P = np.meshgrid(c, ph, indexing="ij")
    S = np.sqrt(1.0 - C**2)
    dirs = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1).reshape(-1, 3)
    w = (wc[:, None] * np.full(angular_nodes, 2.0 * np.pi / angular_nodes)).reshape(-1)
    return dirs, w


def full_sphere_rule(n: int, angular_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    dirs, w = half_sphere_rule(n, angular_nodes)
    return np.concatenate([dirs, -dirs]), np.concatenate([w, w])


def orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows form an orthonormal basis whose first row is ``axis``.

    ``axis`` has shape ``(..., n)`` with unit rows.
    """
    n = axis.shape[-1]
    if n == 1:
        return axis[..., None, :]
    if n == 2:
        perp = np.stack([-axis[..., 1], axis[..., 0]], axis=-1)
        return np.stack([axis, perp], axis=-2)
    # n == 3: pick the coordinate vector least aligned with axis
    k = np.argmin(np.abs(axis), axis=-1)
    e = np.eye(3)[k]
    v = e - np.sum(e * axis, axis=-1, keepdims=True) * axis
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    w = np.cross(axis, v)
    return np.stack([axis, v, w], axis=-2)


# }}}
