from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given
from hypothesis import strategies as st

from fracdual.core import DomainError, SpaceTimeGrid, make_params, sample
from fracdual.functions import affine, constant, gaussian, plane_wave, rational
from fracdual.fraclap import (
    AliasingWarning,
    SpaceQuadrature,
    frac_laplacian_direct,
    frac_laplacian_spectral,
    periodic_image_sum,
)


def _gaussian_oracle(r, n, s):
    """(-Delta)^s exp(-|x|^2/2) = 2^s Gamma(n/2+s)/Gamma(n/2) 1F1(n/2+s; n/2; -|x|^2/2)."""
    return 2**s * sp.gamma(n / 2 + s) / sp.gamma(n / 2) * sp.hyp1f1(n / 2 + s, n / 2, -r * r / 2)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_gaussian_hypergeometric_oracle(n, s):
    p = make_params(0.5, s, n)
    rng = np.random.default_rng(n)
    dirs = rng.normal(size=(4, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = np.array([0.0, 0.7, 1.9, 3.5])
    got = frac_laplacian_direct(gaussian(n), r[:, None] * dirs, p)
    want = _gaussian_oracle(r, n, s)
    assert np.max(np.abs(got - want)) <= 1e-8 * np.max(np.abs(want))


def test_gaussian_origin_half_laplacian():
    got = frac_laplacian_direct(gaussian(1), np.array([0.0]), make_params(0.5, 0.5))
    assert abs(got - math.sqrt(2 / math.pi)) <= 1e-4 * math.sqrt(2 / math.pi)
    assert abs(got - math.sqrt(2 / math.pi)) <= 1e-9


@pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 7.0])
def test_poisson_kernel_half_laplacian(x):
    # |xi| e^{-|xi|} transforms to (1 - x^2)/(1 + x^2)^2
    got = frac_laplacian_direct(rational(1), np.array([x]), make_params(0.5, 0.5))
    assert got.real == pytest.approx((1 - x * x) / (1 + x * x) ** 2, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.75])
def test_plane_wave_is_an_eigenfunction(n, s):
    xi = np.linspace(0.4, 1.2, n)
    u = plane_wave(xi, 0.0, n=n)
    x = np.array([np.linspace(-1, 2, n), np.full(n, 0.3)])
    got = frac_laplacian_direct(u, x, make_params(0.5, s, n))
    want = np.linalg.norm(xi) ** (2 * s) * np.exp(1j * x @ xi)
    assert np.max(np.abs(got - want)) <= 1e-8


@given(st.floats(-50, 50), st.floats(0.05, 0.95), st.sampled_from([1, 2, 3]))
def test_constants_are_annihilated(x, s, n):
    got = frac_laplacian_direct(constant(2.5, n), np.full(n, x), make_params(0.5, s, n))
    assert abs(got) <= 1e-12


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_affine_kernel_above_one_half(n, s):
    x = np.array([np.full(n, 0.0), np.full(n, 3.0), np.linspace(-5, 1, n)])
    r = frac_laplacian_direct(affine(np.ones(n)), x, make_params(0.5, s, n), full_output=True)
    assert np.max(np.abs(r.value)) <= 1e-8
    assert not r.conditional


@pytest.mark.parametrize("s", [0.25, 0.4, 0.5])
def test_affine_flagged_conditional_at_or_below_one_half(s):
    r = frac_laplacian_direct(affine((1.0,)), np.array([0.5]), make_params(0.5, s),
                              full_output=True)
    assert r.conditional


def test_error_estimate_reported():
    r = frac_laplacian_direct(gaussian(2), np.array([0.3, 0.1]), make_params(0.5, 0.5, 2),
                              full_output=True)
    assert 0 <= r.error < 1e-6


def test_space_quadrature_validation():
    with pytest.raises(DomainError):
        SpaceQuadrature(near_cut=2.0)
    with pytest.raises(DomainError):
        SpaceQuadrature(radial_nodes=0)


@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(0.1, 0.9))
def test_translation_equivariance(a, x, s):
    p = make_params(0.5, s)
    lhs = frac_laplacian_direct(gaussian(1).shifted(a), np.array([x + a]), p)
    rhs = frac_laplacian_direct(gaussian(1), np.array([x]), p)
    assert abs(lhs - rhs) <= 1e-8


@given(st.floats(0.4, 2.5), st.floats(-2, 2), st.floats(0.1, 0.9), st.sampled_from([1, 2]))
def test_scaling_law(lam, x, s, n):
    # u(lam x) is the Gaussian of width 1/lam
    p = make_params(0.5, s, n)
    X = np.full(n, x / math.sqrt(n))
    lhs = frac_laplacian_direct(gaussian(n, width=1 / lam), X, p)
    rhs = lam ** (2 * s) * frac_laplacian_direct(gaussian(n), lam * X, p)
    assert abs(lhs - rhs) <= 1e-5 * abs(rhs) + 1e-12


@given(st.floats(0.05, 0.95), st.floats(-1, 1))
def test_positive_at_global_maximum(s, c):
    p = make_params(0.5, s, 2)
    u = gaussian(2, x0=(c, -c))
    assert frac_laplacian_direct(u, np.array([c, -c]), p).real > 0


# spectral route


def _grid(n=1, L=16.0, N=256):
    return SpaceTimeGrid(L, N, -1.0, 1.0, 8, n=n)


def test_spectral_annihilates_constants():
    out = frac_laplacian_spectral(sample(lambda x, t: np.ones(t.shape), _grid()),
                                  make_params(0.5, 0.5))
    assert np.max(np.abs(out.values)) <= 1e-13


@pytest.mark.parametrize("n", [1, 2])
def test_spectral_single_mode_exact(n):
    g = _grid(n, L=math.pi, N=16)
    k = np.array([3.0, -2.0][:n])
    f = sample(lambda x, t: np.exp(1j * x @ k), g)
    out = frac_laplacian_spectral(f, make_params(0.5, 0.3, n))
    assert np.max(np.abs(out.values - np.linalg.norm(k) ** 0.6 * f.values)) <= 1e-12


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_spectral_matches_direct_after_image_correction(s):
    g = _grid()
    p = make_params(0.5, s)
    u = gaussian(1)
    out = frac_laplacian_spectral(sample(u, g), p)
    rng = np.random.default_rng(7)
    for i in rng.choice(np.arange(96, 160), 10, replace=False):
        x = g.x[i]
        direct = frac_laplacian_direct(u, np.array([x]), p)
        corr = periodic_image_sum(u, np.array([x]), p, g.half_length_x)
        spectral = out.values[i, 4]  # t = 0
        assert abs(direct + corr - spectral) <= 1e-4 * (1 + abs(spectral))
        assert abs(direct + corr - spectral) <= 1e-7


def test_raw_spectral_gap_is_the_image_far_field():
    # images at distance 2 L m contribute -C_{1,s} sqrt(2 pi) |2 L m|^(-1-2s) each
    g = _grid()
    p = make_params(0.5, 0.5)
    spectral = frac_laplacian_spectral(sample(gaussian(1), g), p).values[128, 4]
    direct = frac_laplacian_direct(gaussian(1), np.array([0.0]), p)
    monopole = -p.c_ns * math.sqrt(2 * math.pi) * 2 * sp.zeta(2) / 32.0**2
    assert (spectral - direct).real == pytest.approx(monopole, rel=1e-2)


def test_aliasing_warning():
    g = _grid(L=16.0, N=16)
    with pytest.warns(AliasingWarning):
        frac_laplacian_spectral(sample(gaussian(1, width=0.3), g), make_params(0.5, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        frac_laplacian_spectral(sample(gaussian(1), _grid()), make_params(0.5, 0.5))


def test_spectral_dimension_mismatch():
    with pytest.raises(DomainError):
        frac_laplacian_spectral(sample(gaussian(1), _grid()), make_params(0.5, 0.5, 2))


def test_image_sum_needs_one_dimension():
    with pytest.raises(DomainError):
        periodic_image_sum(gaussian(2), np.zeros(2), make_params(0.5, 0.5, 2), 16.0)
