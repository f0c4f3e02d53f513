import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdwave import dispersion as disp
from sdwave.errors import DegenerateWaveNumber
from sdwave.profiles import GAUSSIAN

ETA0 = 19 * math.pi / 20


def fd_grad(f, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = step
        out[k] = (f(x + e) - f(x - e)) / (2 * step)
    return out


def test_omega_values():
    assert disp.omega_semidiscrete(math.pi, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert disp.omega_semidiscrete([math.pi, math.pi], 1.0) == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    assert disp.omega_semidiscrete(ETA0, 1.0) == pytest.approx(2 * math.sin(19 * math.pi / 40), rel=1e-14)
    assert disp.omega_semidiscrete(ETA0, 1.0) == pytest.approx(1.993835, abs=1e-6)


def test_omega_continuous():
    assert disp.omega_continuous([0.0]) == 0.0
    assert disp.omega_continuous([3.0, 4.0]) == pytest.approx(5.0)
    assert disp.omega_continuous(ETA0) == pytest.approx(2.984513, abs=1e-6)


def test_omega_vectorised_shape():
    xi = np.random.default_rng(1).uniform(-3, 3, (5, 4, 2))
    assert disp.omega_semidiscrete(xi, 0.5).shape == (5, 4)


def test_group_velocity_examples():
    assert disp.group_velocity(ETA0, 1.0)[0] == pytest.approx(0.078459, abs=1e-6)
    fd = fd_grad(lambda x: disp.omega_semidiscrete(x, 1.0), [ETA0])
    assert disp.group_velocity(ETA0, 1.0)[0] == pytest.approx(fd[0], abs=1e-8)
    assert abs(disp.group_velocity(math.pi, 1.0)[0]) < 1e-12
    np.testing.assert_allclose(disp.group_velocity([math.pi, math.pi], 1.0), 0.0, atol=1e-12)


def test_group_velocity_vanishes_on_corner_set():
    h = 0.01
    for corner in itertools.product((-math.pi / h, 0.0, math.pi / h), repeat=2):
        if corner == (0.0, 0.0):
            continue
        assert np.linalg.norm(disp.group_velocity(corner, h)) < 1e-12


def test_group_velocity_degenerate():
    with pytest.raises(DegenerateWaveNumber):
        disp.group_velocity([0.0, 0.0], 1.0)
    with pytest.raises(DegenerateWaveNumber):
        disp.ray_position([0.0], [0.0], 1.0)


wave = st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=3)


@settings(max_examples=200, deadline=None)
@given(wave, st.floats(0.01, 2.0))
def test_group_velocity_matches_finite_differences(eta, h):
    xi = np.asarray(eta) / h
    if disp.omega_semidiscrete(xi, h) < 1e-2 / h:
        return
    fd = fd_grad(lambda x: disp.omega_semidiscrete(x, h), xi, step=1e-6 / h)
    np.testing.assert_allclose(disp.group_velocity(xi, h), fd, atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(wave, st.floats(1e-3, 1.0))
def test_homogeneity_and_speed_bound(eta, h):
    xi = np.asarray(eta) / h
    lhs = h * disp.omega_semidiscrete(xi, h)
    rhs = disp.omega_semidiscrete(eta, 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)
    if disp.omega_semidiscrete(xi, h) > 10 * disp.tolerance_zero(h):
        assert np.linalg.norm(disp.group_velocity(xi, h)) <= 1.0 + 1e-12


def test_taylor_split_values():
    s = disp.taylor_split([ETA0])
    f = lambda e: 2 * math.sin((e + ETA0) / 2)  # noqa: E731
    step = 1e-4
    second = (f(step) - 2 * f(0) + f(-step)) / step**2
    assert s.hess0[0, 0] == pytest.approx(second, abs=1e-7)
    assert s.hess0[0, 0] == pytest.approx(-0.498459, abs=1e-6)
    assert disp.taylor_split([math.pi / 2]).omega0 == pytest.approx(1.414214, abs=1e-6)


@pytest.mark.parametrize("eta0", [[ETA0], [math.pi / 3, -2.0], [0.4, 2.9, -1.1]])
def test_remainder_vanishes_to_second_order(eta0):
    s = disp.taylor_split(eta0)
    d = s.d
    assert np.allclose(s.hess0, s.hess0.T)
    assert s.remainder(np.zeros(d)) == 0.0
    R = lambda e: float(s.remainder(e))  # noqa: E731
    np.testing.assert_allclose(fd_grad(R, np.zeros(d), 1e-4), 0.0, atol=1e-7)
    step = 1e-4
    H = np.empty((d, d))
    for k in range(d):
        for l in range(d):
            ek, el = np.eye(d)[k] * step, np.eye(d)[l] * step
            H[k, l] = (R(ek + el) - R(ek - el) - R(-ek + el) + R(-ek - el)) / (4 * step**2)
    assert np.linalg.norm(H) <= 1e-6


def test_derivatives_against_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(10):
        eta = rng.uniform(0.3, 2.8, 2)
        om, grad, hess, third = disp.omega_derivatives(eta)
        step = 1e-5
        for k in range(2):
            e = np.eye(2)[k] * step
            gp = disp.omega_derivatives(eta + e)[2]
            gm = disp.omega_derivatives(eta - e)[2]
            np.testing.assert_allclose(third[k], (gp - gm) / (2 * step), atol=1e-7)
            hp = disp.omega_derivatives(eta + e)[1]
            hm = disp.omega_derivatives(eta - e)[1]
            np.testing.assert_allclose(hess[k], (hp - hm) / (2 * step), atol=1e-7)


def test_remainder_matches_integral_form():
    rng = np.random.default_rng(4)
    for eta0 in ([ETA0], [0.9, 2.2]):
        s = disp.taylor_split(eta0)
        for _ in range(10):
            eta = rng.uniform(-0.4, 0.4, s.d)
            assert float(s.remainder(eta)) == pytest.approx(
                disp.remainder_integral(s, eta), rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("scale", [3e-5, 1e-3, 9e-3])
def test_small_eta_remainder_is_accurate(scale):
    s = disp.taylor_split([ETA0])
    eta = np.array([scale])
    assert float(s.remainder(eta)) == pytest.approx(disp.remainder_integral(s, eta), rel=1e-10)
    assert float(s.remainder(eta)) == pytest.approx(float(s.cubic(eta)), rel=2 * scale)


@pytest.mark.parametrize("eta0", [[ETA0], [2.0, 2.5]])
def test_lagrange_remainder_bound(eta0):
    s = disp.taylor_split(eta0)
    d = s.d
    rng = np.random.default_rng(5)
    for _ in range(20):
        eta = rng.uniform(-1, 1, d)
        eta *= rng.uniform(0, 0.1) / np.linalg.norm(eta)
        r = np.linalg.norm(eta)
        sups = disp.third_derivative_sups(eta0, max(r, 1e-12))
        bound = sum(v / disp.multi_factorial(a) for a, v in sups.items()) * r**3 * d**1.5
        assert abs(float(s.remainder(eta))) <= bound * (1 + 1e-9) + 1e-18


def test_remainder_constant_examples():
    for eta0 in (ETA0, 0.3, 2.0):
        for radius in (0.01, 0.5, 3.0):
            c = disp.remainder_constant([eta0], radius, GAUSSIAN)
            assert c.c_omega <= (1 / 24) ** 2 + 1e-15
    c = disp.remainder_constant([ETA0], 0.1, GAUSSIAN)
    # E|Z|^6 with Z ~ N(0, 1/2)
    assert c.c_profile == pytest.approx(15 / 8, rel=1e-9)
    assert c.value == pytest.approx(c.c_omega * c.c_profile)


def test_remainder_constant_small_radius_limit():
    for eta0 in ([ETA0], [1.0, 2.5]):
        s = disp.taylor_split(eta0)
        centre = sum(abs(v) / disp.multi_factorial(a) for a, v in s.third_by_multi_index.items()) ** 2
        c = disp.remainder_constant(eta0, 1e-7, GAUSSIAN)
        assert c.c_omega == pytest.approx(centre, rel=1e-5)


def test_remainder_constant_monotone_in_radius():
    vals = [disp.remainder_constant([2.2, 0.7], r, GAUSSIAN).c_omega for r in (0.05, 0.2, 0.8)]
    assert vals[0] <= vals[1] <= vals[2]


def test_third_derivative_sup_matches_closed_form_1d():
    # |omega'''| = |cos((eta + eta0)/2)| / 4, monotone near eta0 = 19 pi / 20
    r = 0.3
    sup = disp.third_derivative_sups([ETA0], r)[(3,)]
    grid = np.linspace(-r, r, 20001)
    assert sup == pytest.approx(np.max(np.abs(np.cos((grid + ETA0) / 2))) / 4, rel=1e-8)


def test_ray_position():
    np.testing.assert_allclose(disp.ray_position([0.2, -0.1], [1.0, 2.0], 0.0), [0.2, -0.1])
    assert disp.ray_position([0.0], [ETA0], 1.0, sign=1)[0] == pytest.approx(0.078459, abs=1e-6)
    assert abs(disp.ray_position([0.0], [math.pi], 3.0)[0]) < 1e-12
    with pytest.raises(ValueError):
        disp.ray_position([0.0], [1.0], 1.0, sign=2)
