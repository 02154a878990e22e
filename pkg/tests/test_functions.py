from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracdual.core import DomainError
from fracdual.functions import (
    REGISTRY,
    DerivativeUnavailableError,
    add,
    bump_product,
    cutoff_space,
    cutoff_time,
    exponential_time,
    gaussian,
    plane_wave,
    rational,
    smooth_step,
    time_bump,
)

BUILDERS = {
    "gaussian": lambda n: gaussian(n, width=0.9, x0=0.2, t0=-0.1),
    "bump_product": bump_product,
    "time_bump": lambda n: time_bump(-1.5, 0.5, 2.0, n=n),
    "exponential": lambda n: exponential_time(0.7, n=n),
    "plane_wave": lambda n: plane_wave(np.linspace(0.5, 1.5, n), -0.8, n=n),
    "rational": rational,
}


def _points(n, k=7, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.8, 1.8, (k, n)), rng.uniform(-1.8, 1.8, k)


@pytest.mark.parametrize("name", sorted(BUILDERS))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_time_derivatives_match_finite_differences(name, n):
    u = BUILDERS[name](n)
    x, t = _points(n)
    h = 1e-4
    fd1 = (u.value(x, t + h) - u.value(x, t - h)) / (2 * h)
    fd2 = (u.value(x, t + h) - 2 * u.value(x, t) + u.value(x, t - h)) / h**2
    scale = 1 + np.max(np.abs(u.value(x, t)))
    assert np.max(np.abs(u.dt(x, t) - fd1)) <= 1e-6 * scale
    assert np.max(np.abs(u.dtt(x, t) - fd2)) <= 1e-4 * scale


@pytest.mark.parametrize("name", sorted(BUILDERS))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_laplacian_matches_finite_differences(name, n):
    u = BUILDERS[name](n)
    x, t = _points(n, seed=1)
    h = 1e-3
    fd = -2 * n * u.value(x, t)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fd = fd + u.value(x + e, t) + u.value(x - e, t)
    fd = fd / h**2
    scale = 1 + np.max(np.abs(u.value(x, t)))
    assert np.max(np.abs(u.lap(x, t) - fd)) <= 1e-4 * scale


def test_smooth_step_and_cutoffs():
    u = np.array([-1.0, 0.0, 0.3, 1.0, 2.0])
    v, _, _ = smooth_step(u)
    assert v[0] == 0 and v[1] == 0 and 0 < v[2] < 1 and v[3] == 1 and v[4] == 1
    t = np.array([-2.5, -1.0, 0.0, 1.0, 1.5, 2.0])
    phi = cutoff_time(t)[0]
    assert phi[0] == 0 and phi[1] == phi[2] == phi[3] == 1 and 0 < phi[4] < 1 and phi[5] == 0
    eta = cutoff_space(np.array([[0.0], [0.9], [1.5], [2.0], [3.0]]))[0]
    assert eta[0] == eta[1] == -1 and -1 < eta[2] < 0 and eta[3] == 0 and eta[4] == 0


@given(st.floats(-0.999, 0.999), st.floats(-1.0, 1.0))
def test_smooth_step_symmetry(u, _):
    # h(u) / (h(u) + h(1 - u)) is symmetric about 1/2
    a = smooth_step(np.array([0.5 + u / 2]))[0][0]
    b = smooth_step(np.array([0.5 - u / 2]))[0][0]
    assert a + b == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bump_product_support(n):
    u = bump_product(n)
    x = np.zeros((4, n))
    x[:, 0] = [0.5, 1.99, 2.0, 5.0]
    t = np.array([0.0, 0.0, 0.0, 0.0])
    v = u.value(x, t)
    assert v[0] == -1 and v[2] == 0 and v[3] == 0
    assert u.value(np.zeros((1, n)), np.array([2.0]))[0] == 0
    assert u.t_window == (-2.0, 2.0) and u.x_radius == 2.0


def test_gaussian_window_is_negligible():
    u = gaussian(1)
    a, b = u.t_window
    assert abs(u.value(np.zeros((1, 1)), np.array([b]))[0]) < 1e-16
    assert abs(u.value(np.array([[u.x_radius]]), np.array([0.0]))[0]) < 1e-16


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_shift_moves_the_graph(a, b, x, t):
    u = gaussian(1)
    v = u.shifted(a, b)
    assert v.value(np.array([[x]]), np.array([t]))[0] == pytest.approx(
        u.value(np.array([[x - a]]), np.array([t - b]))[0], rel=1e-14, abs=1e-300)


def test_shifted_plane_wave_modes_track_values():
    u = plane_wave((1.3,), 0.4).shifted(0.7, -0.2)
    amp, xi, rho = u.modes[0]
    x, t = np.array([[0.3]]), np.array([1.1])
    assert u.value(x, t)[0] == pytest.approx(amp * np.exp(1j * (xi[0] * 0.3 + rho * 1.1)))


def test_add_and_scale():
    g, h = gaussian(1), gaussian(1, width=2.0)
    w = add(g, h, 2.0, -1.0)
    x, t = _points(1)
    assert np.allclose(w.value(x, t), 2 * g.value(x, t) - h.value(x, t))
    assert np.allclose(g.scaled(3.0).lap(x, t), 3 * g.lap(x, t))


def test_derivative_lookup():
    g = gaussian(2)
    x, t = _points(2)
    assert g.derivative((0, 0), 1) is g.dt
    h = 1e-5
    d = g.derivative((1, 0), 0)(x, t)
    e = np.array([h, 0.0])
    assert np.allclose(d, (g.value(x + e, t) - g.value(x - e, t)) / (2 * h), atol=1e-8)
    with pytest.raises(DomainError):
        g.derivative((1,), 0)
    with pytest.raises(DerivativeUnavailableError):
        exponential_time(1.0).derivative((1,), 0)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_builds_each_dimension(name):
    for n in (1, 2, 3):
        u = REGISTRY[name](n=n)
        assert u.n == n
        v = u(np.zeros(n), 0.0)
        assert np.all(np.isfinite(v))


def test_unknown_decay_class():
    u = gaussian(1)
    with pytest.raises(DomainError):
        type(u)(**{**u.__dict__, "decay_class": "nonsense"})
