import math

import numpy as np
import pytest

from sdwave.dispersion import omega_semidiscrete
from sdwave.errors import UnstableStep
from sdwave.evolution import (
    WaveState,
    dispersion_on_grid,
    energy,
    leapfrog_check,
    nodewise_energy,
    packet_state,
    propagate,
    time_derivative_field,
    trajectory,
)
from sdwave.lattice import LatticeField, PeriodicLattice, SpectralField, sdft_forward, spectral_l2_norm
from sdwave.packets import PacketSpec, physical_space_data

from conftest import random_complex


def random_state(rng, lat, model="semidiscrete"):
    return WaveState(model, SpectralField(lat, random_complex(rng, lat.shape)),
                     SpectralField(lat, random_complex(rng, lat.shape)))


def rel(a: SpectralField, b: SpectralField) -> float:
    return spectral_l2_norm(a - b) / spectral_l2_norm(b)


def test_identity_at_zero(rng):
    s = random_state(rng, PeriodicLattice(2, 0.1, 16))
    p = propagate(s, 0.0)
    assert np.array_equal(p.phi.values, s.phi.values)
    assert np.array_equal(p.phi_t.values, s.phi_t.values)
    with pytest.raises(ValueError):
        propagate(s, -1.0)


def test_single_mode_is_one_sided():
    lat = PeriodicLattice(1, 0.1, 32)
    k = 21
    om = dispersion_on_grid(lat, "semidiscrete")[k]
    p0 = np.zeros(32, complex)
    p1 = np.zeros(32, complex)
    p0[k], p1[k] = 1.0, 1j * om
    s = WaveState("semidiscrete", SpectralField(lat, p0), SpectralField(lat, p1))
    for t in (0.3, 1.7, 12.0):
        out = propagate(s, t)
        assert out.phi.values[k] == pytest.approx(np.exp(1j * om * t), abs=1e-13)
        field = time_derivative_field(out).values
        np.testing.assert_allclose(np.abs(field), om * lat.dual_weight, rtol=1e-12)
    # E = omega^2 m with m the spectral mass of phi
    assert energy(s) == pytest.approx(om**2 * lat.dual_weight, rel=1e-14)


def test_zero_mode_series():
    lat = PeriodicLattice(1, 0.1, 8)
    p1 = np.zeros(8, complex)
    p1[4] = 2.0
    s = WaveState("semidiscrete", SpectralField(lat, np.zeros(8)), SpectralField(lat, p1))
    assert propagate(s, 3.0).phi.values[4] == pytest.approx(6.0)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("model", ["semidiscrete", "continuous"])
def test_energy_conservation(rng, d, model):
    lat = PeriodicLattice(d, 0.1, 32 if d == 1 else 16)
    for _ in range(10):
        s = random_state(rng, lat, model)
        for t in (0.37, 2.0):
            assert energy(propagate(s, t)) == pytest.approx(energy(s), rel=1e-12)


def test_energy_zero_and_nodewise(rng):
    lat = PeriodicLattice(2, 0.1, 16)
    z = WaveState("semidiscrete", SpectralField(lat, np.zeros(lat.shape)),
                  SpectralField(lat, np.zeros(lat.shape)))
    assert energy(z) == 0.0
    for _ in range(5):
        s = random_state(rng, lat)
        assert nodewise_energy(s) == pytest.approx(energy(s), rel=1e-12)


def test_group_property(rng):
    s = random_state(rng, PeriodicLattice(2, 0.05, 32))
    a = propagate(propagate(s, 0.4), 0.85)
    b = propagate(s, 1.25)
    assert rel(a.phi, b.phi) < 1e-12 and rel(a.phi_t, b.phi_t) < 1e-12
    states = trajectory(s, [0.0, 0.5, 1.0])
    assert [st.time for st in states] == [0.0, 0.5, 1.0]


def test_low_frequency_agreement(rng):
    lat = PeriodicLattice(1, 1.0, 256)
    mask = np.abs(lat.frequencies()[..., 0]) <= 0.1
    vals = [random_complex(rng, lat.shape) * mask for _ in range(2)]
    sd = WaveState("semidiscrete", SpectralField(lat, vals[0]), SpectralField(lat, vals[1]))
    ct = WaveState("continuous", sd.phi, sd.phi_t)
    T = 1.0
    a, b = propagate(sd, T), propagate(ct, T)
    diff = spectral_l2_norm(a.phi_t - b.phi_t) + spectral_l2_norm(a.phi - b.phi)
    mass = spectral_l2_norm(sd.phi_t) + spectral_l2_norm(sd.phi)
    assert diff <= 2 * 0.1**2 * T * mass


def test_packet_velocity_modulus_constant_in_time():
    spec = PacketSpec((0.0,), (19 * math.pi / 20,), 8.0, 0.01, T=2.0)
    s = packet_state(spec)
    base = np.abs(s.phi_t.values)
    for t in (0.5, 2.0):
        np.testing.assert_allclose(np.abs(propagate(s, t).phi_t.values), base, rtol=1e-12, atol=1e-300)


def test_time_derivative_at_zero_matches_physical_data():
    spec = PacketSpec((0.1,), (2.0,), 6.0, 0.02)
    lat = spec.lattice()
    _, f1 = physical_space_data(spec, lat)
    np.testing.assert_allclose(time_derivative_field(packet_state(spec, lat)).values, f1.values,
                               atol=1e-15)


def test_time_derivative_matches_direct_quadrature():
    # eta0 = pi/2 keeps the zone edges and xi = 0 at 7.85 gamma from xi0;
    # the centre ends near 0.7 - cos(pi/4), mid-box
    h, gamma, eta0, x_star, t = 0.05, 4.0, math.pi / 2, 0.7, 1.0
    spec = PacketSpec((x_star,), (eta0,), gamma, h, T=t)
    lat = PeriodicLattice(1, h, 64)
    field = time_derivative_field(propagate(packet_state(spec, lat), t)).values
    # Gauss-Legendre over the packet support inside the zone
    xi0 = eta0 / h
    lo, hi = max(xi0 - 14 * gamma, -math.pi / h), min(xi0 + 14 * gamma, math.pi / h)
    nodes, weights = np.polynomial.legendre.leggauss(400)
    xi = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * weights
    amp = math.sqrt(2 * math.pi / gamma) * np.exp(-0.5 * ((xi - xi0) / gamma) ** 2)
    phase = np.exp(1j * t * omega_semidiscrete(xi[:, None], h))
    x = lat.axis()
    # phase exp(-i x* (xi - xi0)) as in the initial data
    kernel = np.exp(1j * np.outer(x, xi) - 1j * x_star * (xi - xi0))
    oracle = kernel @ (w * amp * phase) / (2 * math.pi)
    assert np.max(np.abs(field - oracle)) <= 1e-8 * np.max(np.abs(oracle))


def test_leapfrog_converges_at_second_order():
    h = 0.01
    lat = PeriodicLattice(1, h, 256)
    x = lat.axis()
    u = LatticeField(lat, np.exp(-x**2 / (2 * 0.1**2)))
    s = WaveState("semidiscrete", sdft_forward(u), sdft_forward(u * 0.0))
    exact = propagate(s, 1.0)
    e1 = spectral_l2_norm(leapfrog_check(s, 1.0, h / 2).phi - exact.phi)
    e2 = spectral_l2_norm(leapfrog_check(s, 1.0, h / 4).phi - exact.phi)
    assert e1 / e2 == pytest.approx(4.0, abs=0.3)


def test_leapfrog_zero_data_and_stability():
    lat = PeriodicLattice(2, 0.1, 16)
    z = WaveState("semidiscrete", SpectralField(lat, np.zeros(lat.shape)),
                  SpectralField(lat, np.zeros(lat.shape)))
    out = leapfrog_check(z, 0.5, 0.05)
    assert not np.any(out.phi.values) and not np.any(out.phi_t.values)
    with pytest.raises(UnstableStep):
        leapfrog_check(z, 0.5, 0.1)
    with pytest.raises(ValueError):
        leapfrog_check(z, 0.33, 0.05)


def test_leapfrog_energy_drift():
    # smooth state: the central-difference velocity carries an O((omega dt)^2) energy error
    h = 0.01
    lat = PeriodicLattice(1, h, 512)
    x = lat.axis()
    u = LatticeField(lat, np.exp(-x**2 / (2 * 0.3**2)))
    s = WaveState("semidiscrete", sdft_forward(u), sdft_forward(u * 0.0))
    drift = abs(energy(leapfrog_check(s, 1.0, h / 2)) - energy(s)) / energy(s)
    assert drift <= 1e-4
