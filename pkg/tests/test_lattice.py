import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdwave.dispersion import omega_semidiscrete
from sdwave.lattice import (
    LatticeField,
    PeriodicLattice,
    SpectralField,
    boundary_mass_fraction,
    discrete_gradient,
    discrete_laplacian,
    exterior_of_unit_ball,
    h1_seminorm,
    inner,
    l2_norm,
    masked_l2_norm,
    region_mask,
    sdft_forward,
    sdft_inverse,
    spectral_derivative,
    spectral_l2_norm,
)

from conftest import random_complex


def direct_forward(f: LatticeField) -> np.ndarray:
    lat = f.lattice
    x = lat.nodes().reshape(-1, lat.d)
    xi = lat.frequencies().reshape(-1, lat.d)
    kernel = np.exp(-1j * xi @ x.T)
    return (lat.cell_volume * kernel @ f.values.reshape(-1)).reshape(lat.shape)


def direct_inverse(F: SpectralField) -> np.ndarray:
    lat = F.lattice
    x = lat.nodes().reshape(-1, lat.d)
    xi = lat.frequencies().reshape(-1, lat.d)
    kernel = np.exp(1j * x @ xi.T)
    return (lat.dual_weight * kernel @ F.values.reshape(-1)).reshape(lat.shape)


def delta(lat, index):
    v = np.zeros(lat.shape, dtype=complex)
    v[index] = 1.0
    return LatticeField(lat, v)


def test_lattice_geometry():
    lat = PeriodicLattice(2, 0.05, 40)
    assert lat.M * lat.h == pytest.approx(2 * lat.L, rel=1e-12)
    xi = lat.frequencies()
    assert np.all(xi >= -math.pi / lat.h - 1e-12) and np.all(xi < math.pi / lat.h)
    assert lat.axis()[lat.M // 2] == 0.0
    assert lat.nodes().shape == (40, 40, 2)
    with pytest.raises(ValueError):
        PeriodicLattice(1, 0.1, 7)
    with pytest.raises(ValueError):
        PeriodicLattice(1, -0.1, 8)


def test_with_half_extent_power_of_two():
    lat = PeriodicLattice.with_half_extent(1, 0.01, 3.3)
    assert lat.M == 1024 and lat.L >= 3.3
    lat = PeriodicLattice.with_half_extent(1, 0.01, 3.3, power_of_two=False)
    assert lat.M == 660


def test_delta_transforms_to_constant():
    for d in (1, 2):
        lat = PeriodicLattice(d, 0.25, 8)
        F = sdft_forward(delta(lat, (4,) * d))
        np.testing.assert_allclose(F.values, lat.h**d, atol=1e-15)
        back = sdft_inverse(SpectralField(lat, np.full(lat.shape, lat.h**d)))
        np.testing.assert_allclose(back.values, delta(lat, (4,) * d).values, atol=1e-14)


def test_plane_wave_is_single_coefficient():
    lat = PeriodicLattice(1, 0.1, 16)
    xi = lat.dual_axis()[11]
    F = sdft_forward(LatticeField(lat, np.exp(1j * xi * lat.axis())))
    assert abs(F.values[11]) == pytest.approx(lat.M * lat.h)
    assert np.max(np.abs(np.delete(F.values, 11))) < 1e-12


def test_zero_spectrum():
    lat = PeriodicLattice(2, 0.1, 8)
    assert np.all(sdft_inverse(SpectralField(lat, np.zeros(lat.shape))).values == 0)


@pytest.mark.parametrize("d,M", [(1, 16), (1, 10), (2, 8), (2, 16)])
def test_transforms_match_direct_summation(rng, d, M):
    lat = PeriodicLattice(d, 0.3, M)
    f = LatticeField(lat, random_complex(rng, lat.shape))
    F = sdft_forward(f)
    np.testing.assert_allclose(F.values, direct_forward(f), rtol=1e-12, atol=1e-12)
    G = SpectralField(lat, random_complex(rng, lat.shape))
    np.testing.assert_allclose(sdft_inverse(G).values, direct_inverse(G), rtol=1e-12, atol=1e-12)
    assert l2_norm(sdft_inverse(F) - f) <= 1e-12 * l2_norm(f)
    g = sdft_inverse(G)
    assert spectral_l2_norm(sdft_forward(g) - G) <= 1e-12 * spectral_l2_norm(G)


def test_gradient_examples():
    lat = PeriodicLattice(1, 0.1, 32)
    const = LatticeField(lat, np.full(lat.shape, 3.0 + 1j))
    assert np.all(discrete_gradient(const)[0].values == 0)
    assert np.all(discrete_laplacian(const).values == 0)
    ident = discrete_gradient(LatticeField(lat, lat.axis()))[0].values
    np.testing.assert_allclose(ident[:-1], 1.0, rtol=1e-12)
    xi = lat.dual_axis()[5]
    wave = LatticeField(lat, np.exp(1j * xi * lat.axis()))
    mult = (np.exp(1j * xi * lat.h) - 1) / lat.h
    np.testing.assert_allclose(discrete_gradient(wave)[0].values, mult * wave.values, atol=1e-12)


def test_laplacian_plane_wave_eigenvalue():
    lat = PeriodicLattice(2, 0.2, 16)
    xi = np.array([lat.dual_axis()[3], lat.dual_axis()[12]])
    x = lat.nodes()
    wave = LatticeField(lat, np.exp(1j * x @ xi))
    lam = -omega_semidiscrete(xi, lat.h) ** 2
    np.testing.assert_allclose(discrete_laplacian(wave).values, lam * wave.values, atol=1e-10)


def test_laplacian_is_sum_of_backward_forward(rng):
    lat = PeriodicLattice(2, 0.1, 12)
    f = LatticeField(lat, random_complex(rng, lat.shape))
    total = np.zeros(lat.shape, dtype=complex)
    for k, g in enumerate(discrete_gradient(f)):
        total += (g.values - np.roll(g.values, 1, axis=k)) / lat.h
    np.testing.assert_allclose(discrete_laplacian(f).values, total, rtol=1e-12, atol=1e-9)


def test_norm_examples():
    lat = PeriodicLattice(2, 0.1, 32)
    zero = LatticeField(lat, np.zeros(lat.shape))
    assert l2_norm(zero) == 0 and h1_seminorm(zero) == 0
    assert l2_norm(delta(lat, (3, 4))) == pytest.approx(math.sqrt(lat.h**2))
    assert masked_l2_norm(zero) == 0
    # node at |x| = 1.5
    j = lat.M // 2 + 15
    assert masked_l2_norm(delta(lat, (j, lat.M // 2))) == pytest.approx(lat.h)
    f = delta(lat, (5, 5)) + delta(lat, (16, 16))
    assert masked_l2_norm(f, lambda x: np.ones(x.shape[:-1], bool)) == pytest.approx(l2_norm(f))
    assert masked_l2_norm(f, np.zeros(lat.shape, bool)) == 0.0


def test_region_mask_forms():
    lat = PeriodicLattice(2, 0.25, 16)
    a = region_mask(lat)
    b = region_mask(lat, exterior_of_unit_ball)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        region_mask(lat, np.zeros((3, 3), bool))


def _random_field(data, d):
    M = data.draw(st.sampled_from([4, 8, 16]))
    h = data.draw(st.floats(0.01, 1.0))
    seed = data.draw(st.integers(0, 2**31))
    lat = PeriodicLattice(d, h, M)
    rng = np.random.default_rng(seed)
    return lat, rng


@settings(max_examples=100, deadline=None)
@given(st.data(), st.sampled_from([1, 2]))
def test_parseval_and_sbp(data, d):
    lat, rng = _random_field(data, d)
    f = LatticeField(lat, random_complex(rng, lat.shape))
    g = LatticeField(lat, random_complex(rng, lat.shape))
    assert l2_norm(f) == pytest.approx(spectral_l2_norm(sdft_forward(f)), rel=1e-12)
    # self-adjointness and summation by parts
    lhs = inner(discrete_laplacian(f), g)
    rhs = inner(f, discrete_laplacian(g))
    assert abs(lhs - rhs) <= 1e-12 * abs(inner(discrete_laplacian(f), discrete_laplacian(f))) ** 0.5 * l2_norm(g) * 10
    sbp = inner(discrete_laplacian(f) * -1.0, f)
    assert sbp.real == pytest.approx(h1_seminorm(f) ** 2, rel=1e-12)
    assert abs(sbp.imag) <= 1e-12 * h1_seminorm(f) ** 2
    mask = rng.random(lat.shape) < 0.5
    assert masked_l2_norm(f, mask) <= l2_norm(f) * (1 + 1e-15)


def test_field_immutability():
    lat = PeriodicLattice(1, 0.1, 8)
    f = LatticeField(lat, np.zeros(8))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(AttributeError):
        f.values = np.ones(8)
    with pytest.raises(TypeError):
        f + SpectralField(lat, np.zeros(8))
    with pytest.raises(ValueError):
        LatticeField(lat, np.zeros(9))


def test_boundary_mass_fraction():
    lat = PeriodicLattice(1, 0.1, 64)
    x = lat.axis()
    inside = LatticeField(lat, np.exp(-x**2 / 0.01))
    assert boundary_mass_fraction(inside) < 1e-100
    edge = delta(lat, (0,))
    assert boundary_mass_fraction(edge) == 1.0


def test_spectral_derivative_matches_analytic():
    lat = PeriodicLattice(2, 0.05, 128)
    x, y = lat.grids()
    f = LatticeField(lat, np.exp(-4 * (x**2 + y**2)) + 0j)
    dxy = spectral_derivative(f, (1, 1)).values
    exact = 64 * x * y * np.exp(-4 * (x**2 + y**2))
    np.testing.assert_allclose(dxy, exact, atol=1e-10)
    for alpha in itertools.product(range(3), repeat=2):
        out = spectral_derivative(f, alpha)
        assert out.values.shape == lat.shape
