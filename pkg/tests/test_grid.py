import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlscyl.errors import ConfigurationError
from nlscyl.grid import (
    ComplexField,
    Space,
    boundary_mass_fraction,
    energy,
    l2_norm,
    make_grid,
    mass,
    mixed_norm,
    sigma_norm,
    sigma_norm_terms,
    spectral_tail_fraction,
    transform,
    x_profile_norm,
)


def random_field(g, seed=0):
    rng = np.random.default_rng(seed)
    return ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))


def gauss(g, a=1.0):
    return ComplexField.from_function(g, lambda *c: np.exp(-sum(y**2 for y in c[:-1]) / a) + 0 * c[-1])


# -- make_grid ----------------------------------------------------------------


def test_make_grid_spacings():
    g = make_grid(1, 16.0, 8, 8)
    assert g.dy == 2.0
    assert g.dx == pytest.approx(np.pi / 4, rel=1e-15)
    np.testing.assert_allclose(g.xi, (np.pi / 8) * np.arange(-4, 4), rtol=1e-15)
    np.testing.assert_array_equal(g.k, np.arange(-4, 4))


def test_make_grid_integer_lattice():
    g = make_grid(1, 2 * np.pi, 8, 8)
    np.testing.assert_allclose(g.xi, np.arange(-4, 4), atol=1e-14)


@pytest.mark.parametrize(
    "args",
    [(1, 16.0, 7, 8), (1, 16.0, 8, 12), (1, 0.0, 8, 8), (1, -1.0, 8, 8), (3, 16.0, 8, 8), (1, 16.0, 4, 8)],
)
def test_make_grid_rejects(args):
    with pytest.raises(ConfigurationError):
        make_grid(*args)


@given(st.sampled_from([8, 16, 64]), st.sampled_from([8, 32]), st.floats(1.0, 1e3))
def test_grid_lattice_invariants(n_y, n_x, L):
    g = make_grid(1, L, n_y, n_x)
    assert g.dy * g.N_y == pytest.approx(L, rel=1e-14)
    assert g.dx * g.N_x == pytest.approx(2 * np.pi, rel=1e-14)
    # symmetric except the single Nyquist mode
    np.testing.assert_allclose(np.sort(-g.xi[1:]), g.xi[1:], rtol=1e-14)
    assert g.xi[0] == pytest.approx(-np.pi * n_y / L)


def test_field_shape_checked():
    g = make_grid(1, 10.0, 8, 8)
    with pytest.raises(ValueError, match="shape"):
        ComplexField(g, np.zeros((8, 4)))


def test_field_is_immutable():
    g = make_grid(1, 10.0, 8, 8)
    f = random_field(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


# -- transform ----------------------------------------------------------------

GRIDS = [(1, 10.0, 8, 8), (1, 37.0, 64, 16), (1, 400.0, 256, 32), (2, 12.0, 16, 8)]


@pytest.mark.parametrize("gargs", GRIDS)
@pytest.mark.parametrize("target", [Space.SPECTRAL, Space.SPECTRAL_Y])
def test_round_trip(gargs, target):
    g = make_grid(*gargs)
    f = random_field(g, 1)
    back = transform(transform(f, target), Space.PHYSICAL)
    assert l2_norm(back - f) <= 1e-12 * l2_norm(f)


@pytest.mark.parametrize("gargs", GRIDS)
@pytest.mark.parametrize("target", [Space.SPECTRAL, Space.SPECTRAL_Y])
def test_parseval(gargs, target):
    g = make_grid(*gargs)
    f = random_field(g, 2)
    assert abs(l2_norm(transform(f, target)) / l2_norm(f) - 1) <= 1e-12


def test_transform_between_spectral_tags():
    g = make_grid(2, 12.0, 16, 8)
    f = random_field(g, 3)
    a = transform(transform(f, Space.SPECTRAL_Y), Space.SPECTRAL)
    b = transform(f, Space.SPECTRAL)
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_single_lattice_mode():
    g = make_grid(1, 16.0, 8, 8)
    m = 3
    xi0 = g.xi[m]
    f = ComplexField.from_function(g, lambda y, x: np.exp(1j * xi0 * y) + 0 * x)
    fh = transform(f, Space.SPECTRAL).values
    nz = np.argwhere(np.abs(fh) > 1e-10)
    assert len(nz) == 1
    assert tuple(nz[0]) == (m, 4)  # k = 0 sits at index N_x/2


def _brute_force_unitary_dft(g, f):
    # (2 pi)^{-1} sum_{j,l} f(y_j, x_l) e^{-i(xi y_j + k x_l)} dy dx
    out = np.zeros(g.shape, complex)
    for a, b in itertools.product(range(g.N_y), range(g.N_x)):
        s = 0j
        for j, l in itertools.product(range(g.N_y), range(g.N_x)):
            s += f[j, l] * np.exp(-1j * (g.xi[a] * g.y[j] + g.k[b] * g.x[l]))
        out[a, b] = s * g.dy * g.dx / (2 * np.pi)
    return out


def test_transform_matches_direct_summation_oracle():
    g = make_grid(1, 5.0, 8, 8)
    f = random_field(g, 4)
    oracle = _brute_force_unitary_dft(g, f.values)
    np.testing.assert_allclose(transform(f, Space.SPECTRAL).values, oracle, atol=1e-12)
    # Parseval with the oracle's spectral measure d xi dk = dxi * 1
    lhs = np.sum(np.abs(oracle) ** 2) * g.dxi
    assert lhs == pytest.approx(mass(f), rel=1e-12)


# -- mass and energy ------------------------------------------------------------


def test_mass_constant_and_zero():
    g = make_grid(1, 12.0, 16, 8)
    c = 0.7 - 0.2j
    f = ComplexField(g, np.full(g.shape, c))
    assert mass(f) == pytest.approx(abs(c) ** 2 * 12.0 * 2 * np.pi, rel=1e-14)
    assert mass(ComplexField.zeros(g)) == 0.0


# frozen from scipy.integrate.quad of 2 pi * exp(-2 y^2) over R
MASS_GAUSS = 7.87480497286121


def test_mass_gaussian_quadrature_oracle():
    oracle = 2 * np.pi * integrate.quad(lambda y: np.exp(-2 * y * y), -np.inf, np.inf, epsrel=1e-13)[0]
    assert oracle == pytest.approx(MASS_GAUSS, rel=1e-13)
    g = make_grid(1, 40.0, 256, 8)
    assert abs(mass(gauss(g)) - MASS_GAUSS) <= 1e-10


def test_energy_zero_and_plane_wave():
    g = make_grid(1, 10.0, 16, 16)
    assert energy(ComplexField.zeros(g), 3.0) == 0.0
    eps, k0, p = 0.3, 2, 2.5
    f = ComplexField.from_function(g, lambda y, x: eps * np.exp(1j * k0 * x) + 0 * y)
    vol = 10.0 * 2 * np.pi
    expect = 0.5 * eps**2 * k0**2 * vol + eps ** (p + 1) / (p + 1) * vol
    assert energy(f, p) == pytest.approx(expect, rel=1e-13)


def test_energy_grid_refinement():
    # oracle: the same packet on a 16x finer transverse grid (sizes are powers of two)
    def packet(g):
        return ComplexField.from_function(g, lambda y, x: np.exp(-(y**2) / 2) * (1 + 0.5 * np.cos(x)) * np.exp(0.5j * y))

    coarse = energy(packet(make_grid(1, 40.0, 128, 16)), 3.0)
    fine = energy(packet(make_grid(1, 40.0, 2048, 16)), 3.0)
    assert abs(coarse / fine - 1) <= 1e-8


def test_energy_nonnegative_defocusing():
    g = make_grid(1, 20.0, 64, 8)
    assert energy(random_field(g, 5), 1.7) >= 0


# -- mixed norms ----------------------------------------------------------------


def test_mixed_norm_constant():
    g = make_grid(1, 12.0, 16, 8)
    c = 1.5j
    f = ComplexField(g, np.full(g.shape, c))
    assert mixed_norm(f, 2, 0) == pytest.approx(abs(c) * np.sqrt(2 * np.pi) * 12.0**0.5, rel=1e-14)


@pytest.mark.parametrize("r", [1.0, 2.0, 3.5, np.inf])
def test_mixed_norm_single_x_mode(r):
    g = make_grid(1, 12.0, 32, 8)
    fy = np.exp(-(g.y**2) / 4)
    f = ComplexField.from_function(g, lambda y, x: np.exp(-(y**2) / 4) * np.exp(1j * x))
    if np.isinf(r):
        fnorm = np.abs(fy).max()
    else:
        fnorm = (np.sum(np.abs(fy) ** r) * g.dy) ** (1 / r)
    assert mixed_norm(f, r, 1) == pytest.approx(np.sqrt(2) * np.sqrt(2 * np.pi) * fnorm, rel=1e-13)


def _nested_sum_oracle(g, u, r, sobolev_x):
    total = 0.0
    for j in range(g.N_y):
        acc = 0.0
        for b, k in enumerate(g.k):
            c = sum(u[j, l] * np.exp(-1j * k * g.x[l]) for l in range(g.N_x)) * g.dx / np.sqrt(2 * np.pi)
            acc += (1 + sobolev_x * k * k) * abs(c) ** 2
        total += acc ** (r / 2) * g.dy
    return total ** (1 / r)


@pytest.mark.parametrize("sobolev_x", [0, 1])
def test_mixed_norm_vs_nested_summation(sobolev_x):
    g = make_grid(1, 9.0, 16, 8)
    u = random_field(g, 6)
    p = 2
    oracle = _nested_sum_oracle(g, u.values, 2 * p, sobolev_x)
    assert abs(mixed_norm(u, 2 * p, sobolev_x) / oracle - 1) <= 1e-12


def test_mixed_norm_rejects_small_r():
    g = make_grid(1, 9.0, 16, 8)
    with pytest.raises(ConfigurationError):
        mixed_norm(random_field(g), 0.5)


@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
@settings(max_examples=25, deadline=None)
def test_norm_homogeneity(seed, c):
    g = make_grid(1, 9.0, 16, 8)
    u = random_field(g, seed)
    assert mixed_norm(u * c, 3.0, 1) == pytest.approx(c * mixed_norm(u, 3.0, 1), rel=1e-12)
    assert sigma_norm(u * c) == pytest.approx(c * sigma_norm(u), rel=1e-12)
    assert mass(u * c) == pytest.approx(c * c * mass(u), rel=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_l2_mixed_norm_is_sqrt_mass(seed):
    g = make_grid(1, 9.0, 16, 8)
    u = random_field(g, seed)
    assert mixed_norm(u, 2, 0) == pytest.approx(np.sqrt(mass(u)), rel=1e-13)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_h1_profile_dominates_l2(seed):
    g = make_grid(1, 9.0, 16, 8)
    u = random_field(g, seed)
    assert np.all(x_profile_norm(u, 1) >= x_profile_norm(u, 0) * (1 - 1e-14))


# -- sigma norm -------------------------------------------------------------------

# frozen from scipy.integrate.quad (see _sigma_oracle)
SIGMA_TERMS = (3.645371502563668, 3.7122646326073143, 6.873778425085234)


def _sigma_oracle():
    q = lambda f: integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0]  # noqa: E731
    return (
        np.sqrt(2 * np.pi * q(lambda y: (1 + y * y) ** 2 * np.exp(-2 * y * y))),
        np.sqrt(2 * np.pi * q(lambda y: (1 + y * y) * 4 * y * y * np.exp(-2 * y * y))),
        # (1 + xi^2) u^ is the transform of u - u''
        np.sqrt(2 * np.pi * q(lambda y: (3 - 4 * y * y) ** 2 * np.exp(-2 * y * y))),
    )


def test_sigma_norm_terms_gaussian():
    np.testing.assert_allclose(_sigma_oracle(), SIGMA_TERMS, rtol=1e-12)
    g = make_grid(1, 40.0, 512, 8)
    np.testing.assert_allclose(sigma_norm_terms(gauss(g)), SIGMA_TERMS, rtol=1e-8)


def test_sigma_norm_zero_and_scaling():
    g = make_grid(1, 40.0, 128, 8)
    assert sigma_norm(ComplexField.zeros(g)) == 0.0
    u = gauss(g)
    assert sigma_norm(u * 2.0) == 2.0 * sigma_norm(u)


# -- monitors ----------------------------------------------------------------------


def test_boundary_mass_fraction():
    g = make_grid(1, 40.0, 256, 8)
    assert boundary_mass_fraction(gauss(g)) < 1e-100
    shifted = ComplexField.from_function(g, lambda y, x: np.exp(-((y - 19.0) ** 2)) + 0 * x)
    assert boundary_mass_fraction(shifted) > 0.5


def test_spectral_tail_fraction():
    g = make_grid(1, 40.0, 256, 8)
    assert spectral_tail_fraction(gauss(g)) < 1e-30
    assert spectral_tail_fraction(random_field(g)) > 0.1
