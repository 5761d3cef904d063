import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlscyl.diagnostics import NormSeries, fit_decay
from nlscyl.errors import DomainError
from nlscyl.grid import ComplexField, l2_norm, make_grid, mass, mixed_norm
from nlscyl.linear import (
    Direction,
    dispersive_ratio,
    frequency_ball_mass,
    lightcone_mass,
    propagate_free,
    propagate_torus,
)


def random_field(g, seed=0):
    rng = np.random.default_rng(seed)
    return ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))


@pytest.fixture(scope="module")
def big():
    return make_grid(1, 1200.0, 4096, 8)


def gaussian(g, sigma=2.0, profile=None):
    prof = profile or (lambda x: 1.0 + 0 * x)
    return ComplexField.from_function(g, lambda y, x: np.exp(-(y**2) / (2 * sigma**2)) * prof(x))


def test_free_identity_at_zero():
    g = make_grid(1, 20.0, 32, 8)
    u = random_field(g)
    np.testing.assert_array_equal(propagate_free(u, 0.0).values, u.values)


def test_free_unitarity():
    g = make_grid(1, 20.0, 64, 16)
    u = random_field(g, 1)
    assert abs(l2_norm(propagate_free(u, 5.0)) / l2_norm(u) - 1) <= 1e-12


@given(st.floats(-20, 20), st.floats(-20, 20))
@settings(max_examples=20, deadline=None)
def test_free_group_property(t1, t2):
    g = make_grid(1, 20.0, 64, 8)
    u = random_field(g, 2)
    a = propagate_free(propagate_free(u, t1), t2)
    b = propagate_free(u, t1 + t2)
    assert l2_norm(a - b) <= 1e-12 * l2_norm(u)


def test_free_gaussian_closed_form():
    # e^{it d_yy} exp(-y^2/a) = (a/(a+4it))^{1/2} exp(-y^2/(a+4it))
    g = make_grid(1, 200.0, 2048, 8)
    a, t = 1.0, 3.0
    u0 = ComplexField.from_function(g, lambda y, x: np.exp(-(y**2) / a) + 0 * x)
    exact = np.sqrt(a / (a + 4j * t)) * np.exp(-(g.y**2) / (a + 4j * t))
    got = propagate_free(u0, t).values[:, 0]
    assert np.max(np.abs(got - exact)) <= 1e-8


def test_free_keeps_x_independence():
    g = make_grid(1, 40.0, 128, 16)
    u = propagate_free(gaussian(g), 7.0)
    assert np.max(np.abs(u.values - u.values[:, :1])) <= 1e-13


def test_torus_identity_on_x_independent():
    g = make_grid(1, 40.0, 64, 16)
    u = gaussian(g)
    for d in Direction:
        np.testing.assert_allclose(propagate_torus(u, 3.3, d).values, u.values, atol=1e-14)


def test_torus_forward_inverse():
    g = make_grid(1, 40.0, 64, 16)
    u = random_field(g, 3)
    back = propagate_torus(propagate_torus(u, 2.7, Direction.FORWARD), 2.7, Direction.INVERSE)
    assert l2_norm(back - u) <= 1e-12 * l2_norm(u)
    assert abs(l2_norm(propagate_torus(u, 2.7)) / l2_norm(u) - 1) <= 1e-12


def test_torus_single_mode_phase():
    g = make_grid(1, 40.0, 16, 16)
    u = ComplexField.from_function(g, lambda y, x: np.exp(1j * x) + 0 * y)
    out = propagate_torus(u, np.pi, Direction.INVERSE)
    np.testing.assert_allclose(out.values, -u.values, atol=1e-13)


def test_dispersive_ratio_degenerate():
    g = make_grid(1, 40.0, 64, 8)
    with pytest.raises(DomainError) as e:
        dispersive_ratio(ComplexField.zeros(g), 1.0)
    assert e.value.code == "DEGENERATE"


def test_dispersive_ratio_out_of_domain():
    g = make_grid(1, 40.0, 256, 8)
    with pytest.raises(DomainError) as e:
        dispersive_ratio(gaussian(g), 100.0)
    assert e.value.code == "OUT_OF_DOMAIN"


def test_dispersive_ratio_plateau(big):
    h = gaussian(big, profile=lambda x: 1 + 0.3 * np.cos(x))
    r = [dispersive_ratio(h, t) for t in (10, 20, 40, 80)]
    assert max(r) / min(r) - 1 < 0.10


def test_dispersive_ratio_homogeneous(big):
    h = gaussian(big)
    assert dispersive_ratio(h * 2.0, 30.0) == pytest.approx(dispersive_ratio(h, 30.0), rel=1e-13)


def test_linear_decay_exponent(big):
    h = gaussian(big)
    times = [10 * 2 ** (j / 4) for j in range(14)] + [100.0]
    s = NormSeries("sup", [(t, mixed_norm(propagate_free(h, t), np.inf, 1)) for t in sorted(set(times)) if t <= 100])
    gamma, r2 = fit_decay(s, (10, 100))
    assert abs(gamma - 0.5) <= 0.03


def test_lightcone_exit_raises(big):
    with pytest.raises(DomainError) as e:
        lightcone_mass(gaussian(big), 100.0, 10.0)
    assert e.value.code == "CONE_EXITS_BOX"


def test_lightcone_huge_cone_total_mass(big):
    h = gaussian(big)
    assert lightcone_mass(h, 10.0, 1e6, allow_exit=True) == pytest.approx(mass(h), rel=1e-12)


def test_lightcone_limit_gaussian(big):
    h = gaussian(big)
    cone = lightcone_mass(h, 100.0, 1.0)
    ball = frequency_ball_mass(h, 0.5)
    assert abs(cone / ball - 1) <= 0.02


def test_frequency_ball_direct_summation(big):
    # oracle: closed-form transform of exp(-y^2/8), |F h|^2 = 4 exp(-4 xi^2),
    # summed over the lattice points of the ball; x contributes 2 pi
    h = gaussian(big)
    xi = big.xi[np.abs(big.xi) <= 0.5]
    oracle = 2 * np.pi * np.sum(4 * np.exp(-4 * xi**2)) * big.dxi
    assert frequency_ball_mass(h, 0.5) == pytest.approx(oracle, rel=1e-12)


def test_lightcone_high_frequency_packet_leaves(big):
    # narrow-band packet around xi0 = 1.5 > K/2 moves out of |y| <= K t
    h = ComplexField.from_function(big, lambda y, x: np.exp(-(y**2) / 200.0) * np.exp(1.5j * y) + 0 * x)
    vals = [lightcone_mass(h, t, 1.0) for t in (25.0, 50.0, 100.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-6 * mass(h)


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
@settings(max_examples=15, deadline=None)
def test_lightcone_monotone_in_K(k1, k2):
    g = make_grid(1, 400.0, 1024, 8)
    h = gaussian(g)
    lo, hi = sorted((k1, k2))
    assert lightcone_mass(h, 50.0, lo) <= lightcone_mass(h, 50.0, hi) + 1e-15
