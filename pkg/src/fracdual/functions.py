"""Built-in analytic space-time test functions.

Every function is vectorized: ``x`` has shape ``(..., n)`` and ``t`` shape
``(...)``, broadcasting against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from numpy.polynomial import hermite_e

from .core import DomainError

DECAY_CLASSES = (
    "schwartz",
    "bump_product",
    "exponential_time",
    "plane_wave",
    "polynomial",
    "constant",
)

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DerivativeUnavailableError(LookupError):
    pass


def _zeros(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # not a pytest class

    name: str
    decay_class: str
    n: int
    value: Field
    dt: Field
    dtt: Field
    lap: Field
    partial: Callable[[tuple[int, ...], int], Field] | None = None
    t_window: tuple[float, float] | None = None
    """Interval outside of which the function is negligible (< 1e-16)."""
    x_center: tuple[float, ...] | None = None
    x_radius: float | None = None
    """Spatial ball outside of which the function is negligible."""
    t_scale: float = 1.0
    x_scale: float = 1.0
    modes: tuple[tuple[complex, tuple[float, ...], float], ...] = ()
    exp_rate: float | None = None
    time_independent: bool = False
    space_independent: bool = False
    x_growth: float | None = None
    t_growth: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.decay_class not in DECAY_CLASSES:
            raise DomainError(f"unknown decay class: {self.decay_class!r}")

    def __call__(self, x, t) -> np.ndarray:
        x, t = self.coerce(x, t)
        return self.value(x, t)

    def coerce(self, x, t) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.n:
            x = x[..., None] if self.n == 1 else x
        if x.shape[-1] != self.n:
            raise DomainError(f"expected points in R^{self.n}, got shape {x.shape}")
        return x, np.asarray(t, dtype=float)

    @property
    def is_windowed(self) -> bool:
        return self.decay_class in ("schwartz", "bump_product")

    def derivative(self, gamma: tuple[int, ...], beta: int) -> Field:
        gamma = tuple(int(g) for g in gamma) or (0,) * self.n
        if len(gamma) != self.n:
            raise DomainError(f"multi-index {gamma} does not match n = {self.n}")
        if sum(gamma) == 0 and beta == 0:
            return self.value
        if sum(gamma) == 0 and beta == 1:
            return self.dt
        if sum(gamma) == 0 and beta == 2:
            return self.dtt
        if self.partial is None:
            raise DerivativeUnavailableError(
                f"{self.name}: derivative {gamma}, {beta} unavailable")
        return self.partial(gamma, beta)

    def scaled(self, factor: complex, name: str | None = None) -> TestFunction:
        def mul(fn: Field) -> Field:
            return lambda x, t: factor * fn(x, t)

        partial = None
        if self.partial is not None:
            p = self.partial
            partial = lambda g, b: mul(p(g, b))  # noqa: E731
        return _replace(
            self,
            name=name or f"{factor}*{self.name}",
            value=mul(self.value), dt=mul(self.dt), dtt=mul(self.dtt),
            lap=mul(self.lap), partial=partial,
            modes=tuple((factor * a, xi, rho) for a, xi, rho in self.modes),
        )

    def shifted(self, dx: np.ndarray | float = 0.0, dt: float = 0.0) -> TestFunction:
        """The function ``(x, t) -> u(x - dx, t - dt)``."""
        a = np.broadcast_to(np.asarray(dx, dtype=float), (self.n,)).copy()

        def sh(fn: Field) -> Field:
            return lambda x, t: fn(np.asarray(x) - a, np.asarray(t) - dt)

        partial = None
        if self.partial is not None:
            p = self.partial
            partial = lambda g, b: sh(p(g, b))  # noqa: E731
        modes = tuple(
            (amp * np.exp(-1j * (np.dot(xi, a) + rho * dt)), xi, rho)
            for amp, xi, rho in self.modes
        )
        return _replace(
            self,
            name=f"{self.name}(shifted)",
            value=sh(self.value), dt=sh(self.dt), dtt=sh(self.dtt),
            lap=sh(self.lap), partial=partial, modes=modes,
            t_window=None if self.t_window is None
            else (self.t_window[0] + dt, self.t_window[1] + dt),
            x_center=None if self.x_center is None
            else tuple(np.asarray(self.x_center) + a),
        )


def _replace(u: TestFunction, **kw: Any) -> TestFunction:
    import dataclasses

    return dataclasses.replace(u, **kw)


def add(u: TestFunction, v: TestFunction, a: complex = 1.0, b: complex = 1.0) -> TestFunction:
    """Linear combination ``a u + b v`` of two windowed functions."""
    if u.n != v.n:
        raise DomainError("dimension mismatch")
    if not (u.is_windowed and v.is_windowed):
        raise DomainError("linear combinations are supported for windowed functions")

    def comb(f: Field, g: Field) -> Field:
        return lambda x, t: a * f(x, t) + b * g(x, t)

    lo = min(u.t_window[0], v.t_window[0])
    hi = max(u.t_window[1], v.t_window[1])
    cu, cv = np.asarray(u.x_center), np.asarray(v.x_center)
    c = 0.5 * (cu + cv)
    r = max(np.linalg.norm(cu - c) + u.x_radius, np.linalg.norm(cv - c) + v.x_radius)
    return TestFunction(
        name=f"{a}*{u.name}+{b}*{v.name}",
        decay_class="schwartz",
        n=u.n,
        value=comb(u.value, v.value),
        dt=comb(u.dt, v.dt),
        dtt=comb(u.dtt, v.dtt),
        lap=comb(u.lap, v.lap),
        t_window=(lo, hi),
        x_center=tuple(c),
        x_radius=float(r),
        t_scale=min(u.t_scale, v.t_scale),
        x_scale=min(u.x_scale, v.x_scale),
    )


# {{{ constant and polynomial families


def constant(c: float = 1.0, n: int = 1) -> TestFunction:
    def value(x, t):
        return np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)), c, dtype=float)

    def partial(gamma, beta):
        return _zeros

    return TestFunction(
        name="constant", decay_class="constant", n=n,
        value=value, dt=_zeros, dtt=_zeros, lap=_zeros, partial=partial,
        time_independent=True, space_independent=True,
        x_growth=0.0, t_growth=0.0, metadata={"c": c},
    )


def affine(coeffs=(1.0,), c0: float = 0.0, n: int | None = None) -> TestFunction:
    """``c0 + coeffs . x``; the default is ``x_1``."""
    a = np.asarray(coeffs, dtype=float)
    n = n or a.size
    if a.size < n:
        a = np.concatenate([a, np.zeros(n - a.size)])

    def value(x, t):
        return np.broadcast_to(c0 + np.asarray(x) @ a, np.broadcast_shapes(
            np.shape(x)[:-1], np.shape(t))).astype(float)

    def partial(gamma, beta):
        if beta > 0 or sum(gamma) > 1:
            return _zeros
        i = int(np.argmax(gamma))
        return lambda x, t: np.full(
            np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)), a[i])

    return TestFunction(
        name="affine", decay_class="polynomial", n=n,
        value=value, dt=_zeros, dtt=_zeros, lap=_zeros, partial=partial,
        time_independent=True, x_growth=1.0 if np.any(a) else 0.0, t_growth=0.0,
        metadata={"coeffs": a.tolist(), "c0": c0},
    )


def time_monomial(k: int = 2, n: int = 1) -> TestFunction:
    """``t^k``, constant in space."""
    def value(x, t):
        return np.broadcast_to(np.asarray(t, float) ** k,
                               np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    def dt(x, t):
        return np.broadcast_to(k * np.asarray(t, float) ** (k - 1) if k else 0.0 * t,
                               np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    def dtt(x, t):
        return np.broadcast_to(k * (k - 1) * np.asarray(t, float) ** max(k - 2, 0),
                               np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    return TestFunction(
        name=f"t^{k}", decay_class="polynomial", n=n,
        value=value, dt=dt, dtt=dtt, lap=_zeros,
        space_independent=True, x_growth=0.0, t_growth=float(k),
        metadata={"k": k},
    )


def radial_power(p: float = 0.5, n: int = 1) -> TestFunction:
    """``|x|^p``, constant in time."""
    def value(x, t):
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        return np.broadcast_to(r**p, np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    def lap(x, t):
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        with np.errstate(divide="ignore"):
            out = p * (p + n - 2) * r ** (p - 2)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    return TestFunction(
        name=f"|x|^{p}", decay_class="polynomial", n=n,
        value=value, dt=_zeros, dtt=_zeros, lap=lap,
        time_independent=True, x_growth=float(p), t_growth=0.0,
        metadata={"p": p},
    )


def rational(n: int = 1) -> TestFunction:
    """``1 / (1 + |x|^2)``, constant in time."""
    def shape(x, t):
        return np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))

    def value(x, t):
        r2 = np.sum(np.asarray(x, float) ** 2, axis=-1)
        return np.broadcast_to(1.0 / (1.0 + r2), shape(x, t))

    def lap(x, t):
        r2 = np.sum(np.asarray(x, float) ** 2, axis=-1)
        q = 1.0 + r2
        return np.broadcast_to(-2.0 * n / q**2 + 8.0 * r2 / q**3, shape(x, t))

    def partial(gamma, beta):
        if beta > 0:
            return _zeros
        order = sum(gamma)
        idx = [i for i, g in enumerate(gamma) for _ in range(g)]
        if order == 1:
            i = idx[0]
            return lambda x, t: np.broadcast_to(
                -2.0 * np.asarray(x)[..., i]
                / (1.0 + np.sum(np.asarray(x) ** 2, axis=-1)) ** 2, shape(x, t))
        if order == 2:
            i, j = idx

            def d2(x, t):
                x = np.asarray(x, float)
                q = 1.0 + np.sum(x**2, axis=-1)
                out = 8.0 * x[..., i] * x[..., j] / q**3
                if i == j:
                    out = out - 2.0 / q**2
                return np.broadcast_to(out, shape(x, t))

            return d2
        raise DerivativeUnavailableError(f"rational: order {order} > 2")

    return TestFunction(
        name="rational", decay_class="polynomial", n=n,
        value=value, dt=_zeros, dtt=_zeros, lap=lap, partial=partial,
        time_independent=True, x_growth=-2.0, t_growth=0.0,
    )


# }}}


# {{{ Gaussian


def _hermite_factor(y: np.ndarray, k: int, w: float) -> np.ndarray:
    # d^k/dz^k exp(-z^2 / 2 w^2) = (-1)^k He_k(z / w) / w^k * exp(...)
    if k == 0:
        return np.ones_like(y)
    c = np.zeros(k + 1)
    c[k] = 1.0
    return (-1.0) ** k * hermite_e.hermeval(y, c) / w**k


def gaussian(n: int = 1, width: float = 1.0, x0=0.0, t0: float = 0.0,
             amp: float = 1.0) -> TestFunction:
    """``amp * exp(-(|x - x0|^2 + (t - t0)^2) / (2 width^2))``."""
    w = float(width)
    c = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
    reach = 8.7 * w  # exp(-reach^2 / 2 w^2) < 1e-16

    def value(x, t):
        r2 = np.sum((np.asarray(x) - c) ** 2, axis=-1) + (np.asarray(t) - t0) ** 2
        return amp * np.exp(-0.5 * r2 / w**2)

    def dt(x, t):
        return -(np.asarray(t) - t0) / w**2 * value(x, t)

    def dtt(x, t):
        tau = np.asarray(t) - t0
        return (tau**2 / w**4 - 1.0 / w**2) * value(x, t)

    def lap(x, t):
        r2 = np.sum((np.asarray(x) - c) ** 2, axis=-1)
        return (r2 / w**4 - n / w**2) * value(x, t)

    def partial(gamma, beta):
        def d(x, t):
            x = np.asarray(x, float)
            out = value(x, t) * _hermite_factor((np.asarray(t) - t0) / w, beta, w)
            for i, g in enumerate(gamma):
                out = out * _hermite_factor((x[..., i] - c[i]) / w, g, w)
            return out

        return d

    return TestFunction(
        name="gaussian", decay_class="schwartz", n=n,
        value=value, dt=dt, dtt=dtt, lap=lap, partial=partial,
        t_window=(t0 - reach, t0 + reach),
        x_center=tuple(c), x_radius=reach,
        t_scale=w, x_scale=w,
        metadata={"width": w, "x0": c.tolist(), "t0": t0, "amp": amp},
    )


# }}}


# {{{ smooth cutoffs


def _h(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """exp(-1/u) for u > 0 and its first two derivatives."""
    u = np.asarray(u, dtype=float)
    pos = u > 0
    us = np.where(pos, u, 1.0)
    h = np.where(pos, np.exp(-1.0 / us), 0.0)
    h1 = np.where(pos, h / us**2, 0.0)
    h2 = np.where(pos, h * (1.0 / us**4 - 2.0 / us**3), 0.0)
    return h, h1, h2


def smooth_step(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1; value, first, second derivative."""
    A, A1, A2 = _h(u)
    B, B1, B2 = _h(1.0 - np.asarray(u, dtype=float))
    B1, B2 = -B1, B2
    D = A + B
    N = A1 * B - A * B1
    S = A / D
    S1 = N / D**2
    N1 = A2 * B - A * B2
    D1 = A1 + B1
    S2 = (N1 * D - 2.0 * N * D1) / D**3
    return S, S1, S2


def cutoff_time(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """1 on [-1, 1], 0 outside (-2, 2)."""
    t = np.asarray(t, dtype=float)
    S, S1, S2 = smooth_step(2.0 - np.abs(t))
    sg = np.sign(t)
    return S, -sg * S1, S2


def cutoff_space(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """-1 on the closed unit ball, 0 outside the ball of radius 2; value and Laplacian."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    S, S1, S2 = smooth_step(2.0 - r)
    # g(r) = -S(2 - r): g' = S1, g'' = -S2
    rs = np.where(r > 0, r, 1.0)
    lap = -S2 + np.where(r > 0, (n - 1) * S1 / rs, 0.0)
    return -S, lap


def bump_product(n: int = 1) -> TestFunction:
    """``eta(x) phi(t)``: eta = -1 on B_1, 0 off B_2; phi = 1 on [-1, 1], 0 off (-2, 2)."""

    def value(x, t):
        return cutoff_space(x)[0] * cutoff_time(t)[0]

    def dt(x, t):
        return cutoff_space(x)[0] * cutoff_time(t)[1]

    def dtt(x, t):
        return cutoff_space(x)[0] * cutoff_time(t)[2]

    def lap(x, t):
        return cutoff_space(x)[1] * cutoff_time(t)[0]

    def partial(gamma, beta):
        if sum(gamma) == 0:
            return [value, dt, dtt][beta] if beta <= 2 else _unavailable(beta)
        raise DerivativeUnavailableError("bump_product: spatial partials unavailable")

    return TestFunction(
        name="bump_product", decay_class="bump_product", n=n,
        value=value, dt=dt, dtt=dtt, lap=lap, partial=partial,
        t_window=(-2.0, 2.0), x_center=(0.0,) * n, x_radius=2.0,
        t_scale=0.125, x_scale=0.125,
    )


def _unavailable(beta):
    raise DerivativeUnavailableError(f"time derivative of order {beta} unavailable")


def time_bump(a: float = -1.0, b: float = 1.0, amp: float = 1.0, n: int = 1) -> TestFunction:
    """Standard mollifier ``exp(1 - 1/(1 - y^2))`` on ``(a, b)``, peak ``amp``."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def parts(t):
        y = (np.asarray(t, dtype=float) - mid) / half
        inside = np.abs(y) < 1
        q = np.where(inside, 1.0 - y**2, 1.0)
        g = np.where(inside, amp * np.exp(1.0 - 1.0 / q), 0.0)
        g1 = g * (-2.0 * y / q**2) / half
        g2 = g * (6.0 * y**4 - 2.0) / q**4 / half**2
        return g, np.where(inside, g1, 0.0), np.where(inside, g2, 0.0)

    def bc(x, v):
        return np.broadcast_to(v, np.broadcast_shapes(np.shape(x)[:-1], np.shape(v)))

    return TestFunction(
        name="time_bump", decay_class="schwartz", n=n,
        value=lambda x, t: bc(x, parts(t)[0]),
        dt=lambda x, t: bc(x, parts(t)[1]),
        dtt=lambda x, t: bc(x, parts(t)[2]),
        lap=_zeros,
        t_window=(a, b), x_center=(0.0,) * n, x_radius=math.inf,
        t_scale=half / 8.0, space_independent=True,
        metadata={"a": a, "b": b, "amp": amp},
    )


# }}}


# {{{ exponentials and plane waves


def exponential_time(lam: float = 1.0, n: int = 1) -> TestFunction:
    """``exp(lam t)``, constant in space."""
    if lam == 0:
        return constant(1.0, n)

    def value(x, t):
        return np.broadcast_to(np.exp(lam * np.asarray(t, float)),
                               np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)))

    return TestFunction(
        name="exponential", decay_class="exponential_time", n=n,
        value=value,
        dt=lambda x, t: lam * value(x, t),
        dtt=lambda x, t: lam**2 * value(x, t),
        lap=_zeros, exp_rate=float(lam), space_independent=True,
        t_scale=1.0 / abs(lam), metadata={"lam": lam},
    )


def plane_waves(modes, n: int = 1, name: str = "plane_wave") -> TestFunction:
    """Finite sum ``sum_k a_k exp(i (xi_k . x + rho_k t))``."""
    modes = tuple(
        (complex(a), tuple(np.broadcast_to(np.asarray(xi, float), (n,)).tolist()), float(rho))
        for a, xi, rho in modes
    )

    def combo(factor):
        def fn(x, t):
            x = np.asarray(x, float)
            t = np.asarray(t, float)
            out = np.zeros(np.broadcast_shapes(x.shape[:-1], t.shape), dtype=complex)
            for a, xi, rho in modes:
                xiv = np.asarray(xi)
                out = out + a * factor(xiv, rho) * np.exp(1j * (x @ xiv + rho * t))
            return out

        return fn

    def partial(gamma, beta):
        return combo(lambda xi, rho: np.prod((1j * xi) ** np.asarray(gamma)) * (1j * rho) ** beta)

    return TestFunction(
        name=name, decay_class="plane_wave", n=n,
        value=combo(lambda xi, rho: 1.0),
        dt=combo(lambda xi, rho: 1j * rho),
        dtt=combo(lambda xi, rho: -(rho**2)),
        lap=combo(lambda xi, rho: -float(np.dot(xi, xi))),
        partial=partial, modes=modes,
        time_independent=all(rho == 0 for _, _, rho in modes),
        space_independent=all(not any(xi) for _, xi, _ in modes),
        metadata={"modes": [(str(a), list(xi), rho) for a, xi, rho in modes]},
    )


def plane_wave(xi=0.0, rho: float = 0.0, n: int = 1, amp: complex = 1.0) -> TestFunction:
    return plane_waves([(amp, xi, rho)], n=n)


def cosine_time(rho: float = 1.0, n: int = 1) -> TestFunction:
    """``cos(rho t)`` as two plane waves."""
    return plane_waves([(0.5, 0.0, rho), (0.5, 0.0, -rho)], n=n, name="cos_time")


def cosine_space(xi=1.0, n: int = 1) -> TestFunction:
    return plane_waves([(0.5, xi, 0.0), (0.5, -np.asarray(xi, float), 0.0)], n=n,
                       name="cos_space")


# }}}


REGISTRY: dict[str, Callable[..., TestFunction]] = {
    "constant": constant,
    "affine": affine,
    "gaussian": gaussian,
    "bump_product": bump_product,
    "time_bump": time_bump,
    "plane_wave": plane_wave,
    "cos_time": cosine_time,
    "exponential": exponential_time,
    "zero": lambda n=1: constant(0.0, n),
    "t_squared": lambda n=1: time_monomial(2, n),
    "sqrt_radius": lambda n=1: radial_power(0.5, n),
    "rational": rational,
}
