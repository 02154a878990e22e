from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracdual.core import DomainError, FitDegeneracyError, SampledField, SpaceTimeGrid, make_params, sample
from fracdual.dualop import (
    ExteriorMassError,
    counterexample_lower_bound,
    decay_profile,
    dual_apply,
    fourier_support_check,
    ft_spacetime,
    ift_spacetime,
    symbol,
    verify_multiplier,
    verify_parts,
)
from fracdual.fraclap import frac_laplacian_direct
from fracdual.functions import add, affine, bump_product, constant, gaussian, plane_wave, time_bump
from fracdual.marchaud import marchaud

MULT_GRID = SpaceTimeGrid(16.0, 256, -16.0, 16.0, 256)
PAIR_GRID = SpaceTimeGrid(12.0, 128, -12.0, 12.0, 128)


# pointwise operator


@pytest.mark.parametrize("side", ["left", "right"])
def test_dual_apply_is_the_sum_of_both_parts(side):
    p = make_params(0.4, 0.6, 2)
    u = gaussian(2, x0=(0.2, -0.1))
    x, t = np.array([0.5, 0.3]), 0.7
    want = marchaud(u, t, p, side=side, x=x) + frac_laplacian_direct(u, x, p, t=t)
    assert dual_apply(u, x, t, side, p) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dual_apply_annihilates_constants(n):
    x = np.ones(n) * 0.3
    assert abs(dual_apply(constant(4.0, n), x, -1.0, "right", make_params(0.5, 0.5, n))) <= 1e-12


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_affine_solution_above_one_half(alpha):
    p = make_params(alpha, 0.75, 2)
    x = np.array([[0.0, 0.0], [2.0, -1.0], [-7.0, 3.0]])
    got = dual_apply(affine((1.0, 0.0)), x, np.array([0.0, 1.0, -2.0]), "right", p)
    assert np.max(np.abs(got)) <= 1e-6


@pytest.mark.parametrize("side", ["left", "right"])
def test_plane_wave_multiplier(side):
    p = make_params(0.3, 0.75, 1)
    xi, rho = 1.4, -0.9
    x, t = np.array([[0.2], [-3.0]]), np.array([0.1, 2.0])
    got = dual_apply(plane_wave((xi,), rho), x, t, side, p)
    want = symbol(xi, rho, p, side) * np.exp(1j * (xi * x[:, 0] + rho * t))
    assert np.max(np.abs(got - want)) <= 1e-6


@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.sampled_from(["left", "right"]))
def test_symbol_real_part_nonnegative(xi, rho, alpha, s, side):
    p = make_params(alpha, s)
    m = symbol(xi, rho, p, side)
    assert m.real >= 0
    if (xi, rho) != (0.0, 0.0):
        assert abs(m) > 0
        assert m.real > 0
    # real test functions: left and right symbols are conjugate
    assert symbol(xi, rho, p, "left") == pytest.approx(np.conj(symbol(xi, rho, p, "right")))
    assert symbol(-xi, -rho, p, side) == pytest.approx(np.conj(m))


def test_symbol_zero_only_at_origin():
    p = make_params(0.5, 0.5)
    XI, RHO = np.meshgrid(np.linspace(-2, 2, 41), np.linspace(-2, 2, 41), indexing="ij")
    m = np.abs(symbol(XI, RHO, p))
    assert np.count_nonzero(m == 0) == 1 and m[20, 20] == 0


def test_symbol_multidimensional_frequency():
    p = make_params(0.5, 0.25, 3)
    xi = np.array([[1.0, 2.0, 2.0]])
    assert symbol(xi, 0.0, p)[0] == pytest.approx(3.0**0.5)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_linearity(a, b, x, t):
    p = make_params(0.5, 0.5)
    u, v = gaussian(1), time_bump(-1.0, 1.5)
    lhs = dual_apply(add(u, v, a, b), np.array([x]), t, "right", p)
    rhs = a * dual_apply(u, np.array([x]), t, "right", p) + b * dual_apply(v, np.array([x]), t, "right", p)
    assert abs(lhs - rhs) <= 1e-8 * (abs(a) + abs(b)) + 1e-15


# transforms


def test_transform_zero_field():
    out = ft_spacetime(SampledField(MULT_GRID, np.zeros(MULT_GRID.shape)))
    assert np.all(out.values == 0)


def test_gaussian_self_transform():
    F = ft_spacetime(sample(gaussian(1), MULT_GRID))
    XI, RHO = MULT_GRID.frequency_mesh()
    want = np.exp(-(XI[..., 0] ** 2 + RHO**2) / 2)
    assert np.max(np.abs(F.values - want)) <= 1e-8


def test_shift_modulation():
    w, x0, t0 = 0.5, 1.5, -1.0
    F = ft_spacetime(sample(gaussian(1, width=w, x0=x0, t0=t0), MULT_GRID))
    XI, RHO = MULT_GRID.frequency_mesh()
    XI = XI[..., 0]
    want = w**2 * np.exp(-(w**2) * (XI**2 + RHO**2) / 2) * np.exp(-1j * (XI * x0 + RHO * t0))
    assert np.max(np.abs(F.values - want)) <= 1e-6


def test_transform_round_trip():
    g = SpaceTimeGrid(4.0, 16, -3.0, 3.0, 12, n=2)
    rng = np.random.default_rng(3)
    f = SampledField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    assert np.max(np.abs(ift_spacetime(ft_spacetime(f)).values - f.values)) <= 1e-13


# multiplier identity


def test_multiplier_zero_function():
    assert verify_multiplier(constant(0.0), "right", make_params(0.5, 0.5), MULT_GRID).passed


def test_multiplier_gaussian_and_conjugate_sides():
    p = make_params(0.5, 0.5)
    right = verify_multiplier(gaussian(1), "right", p, MULT_GRID)
    left = verify_multiplier(gaussian(1), "left", p, MULT_GRID)
    assert right.passed and right.measured <= 1e-3
    assert left.passed
    gap = np.max(np.abs(np.asarray(left.details["lhs"]) - np.conj(right.details["lhs"])))
    assert gap <= 1e-6


def test_multiplier_needs_one_dimension():
    p = make_params(0.5, 0.5, 2)
    with pytest.raises(DomainError):
        verify_multiplier(gaussian(2), "right", p, SpaceTimeGrid(16.0, 64, -16, 16, 64, n=2))


# duality pairing


def test_pairing_zero():
    r = verify_parts(constant(0.0), gaussian(1), make_params(0.5, 0.5), PAIR_GRID)
    assert r.lhs == 0 and r.rhs == 0 and r.passed


@pytest.mark.parametrize("phi", [gaussian(1), gaussian(1).shifted(0.7, -0.4)])
def test_pairing_gaussians(phi):
    r = verify_parts(gaussian(1), phi, make_params(0.5, 0.5), PAIR_GRID)
    assert r.passed and r.abs_gap <= 1e-4 * (1 + abs(r.lhs))
    assert r.abs_gap <= 1e-8


def test_pairing_box_too_small():
    with pytest.raises(ExteriorMassError):
        verify_parts(gaussian(1, width=3.0), gaussian(1), make_params(0.5, 0.5),
                     SpaceTimeGrid(4.0, 32, -4, 4, 32))


# decay


def test_spatial_decay_of_bump_product():
    r = decay_profile(bump_product(1), "space", make_params(0.5, 0.5))
    assert r.theoretical_exponent == 2.0 and r.exponent_gap <= 0.1
    radii = [a for a, _ in r.samples]
    assert len(radii) >= 8 and radii[-1] / radii[0] >= 10 and np.all(np.diff(radii) > 0)
    assert all(m <= r.bound_constant / (1 + a**2) * (1 + 1e-12) for a, m in r.samples)


def test_temporal_decay_of_gaussian():
    r = decay_profile(gaussian(1), "time", make_params(0.5, 0.5))
    assert r.theoretical_exponent == 1.5 and r.exponent_gap <= 0.1 and r.fit_r2 > 0.99


def test_decay_of_zero_is_degenerate():
    with pytest.raises(FitDegeneracyError):
        decay_profile(constant(0.0), "space", make_params(0.5, 0.5))


# counterexample


@pytest.mark.parametrize("n", [1, 2])
def test_counterexample_lower_bound(n):
    p = make_params(0.5, 0.5, n)
    r = counterexample_lower_bound(p)
    assert r.passed
    assert r.details["c0"] > 0
    assert r.details["slope"] <= n + 2 * p.s + 0.1


def test_counterexample_value_at_four():
    p = make_params(0.5, 0.5, 1)
    u = bump_product(1)
    v = dual_apply(u, np.array([[4.0], [4.0]]), np.array([0.5, -0.5]), "right", p)
    assert v[0] > 0 and abs(v[0] - v[1]) <= 1e-12
    # exterior integral: C_{1,1/2} int_{-2}^{2} -eta(y) / |4 - y|^2 dy >= C_{1,1/2} * 2 / 36
    assert v[0].real >= p.c_ns * 2 / 36


# fourier support


def _support_grid():
    return SpaceTimeGrid(8.0, 32, -4.0, 4.0, 32)


def test_support_of_constant():
    r = fourier_support_check(sample(lambda x, t: 3.0 + 0 * t, _support_grid()))
    assert r.passed and r.measured <= 1e-12 and not r.details["affine_like"]


def test_support_of_ramp_is_affine_like():
    r = fourier_support_check(sample(lambda x, t: x[..., 0] + 0 * t, _support_grid()))
    assert r.passed and r.details["affine_like"] and r.details["affine_axis"] == 0
    assert r.measured > 1e-6


def test_support_of_gaussian_fails():
    r = fourier_support_check(sample(gaussian(1), _support_grid()))
    assert not r.passed and not r.details["affine_like"]


def test_support_flags_small_grids():
    r = fourier_support_check(sample(lambda x, t: 1.0 + 0 * t, SpaceTimeGrid(1.0, 8, 0, 1, 8)))
    assert r.details["under_resolved"]
