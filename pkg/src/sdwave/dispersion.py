"""Dispersion relations of the semi-discrete and continuous wave equations.

Wave numbers are arrays whose last axis holds the ``d`` components, so a
single call evaluates a whole dual grid.  A bare scalar is a 1-d wave number.

The finite-difference relation is

    omega_{d,h}(xi)^2 = (4 / h^2) * sum_k sin^2(xi_k h / 2)

and ``omega_{d,h}(xi) = omega_{d,1}(h xi) / h``.  Everything below that needs
derivatives works with the normalised relation ``omega_{d,1}`` in the variable
``eta = h xi``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateWaveNumber

#: ``omega`` below ``ZERO_TOL / h`` is treated as the degenerate zero set.
ZERO_TOL = 1e-10

#: Below this ``|eta|`` the remainder is evaluated from its integral form
#: instead of ``omega - L - D`` (cancellation guard).
SERIES_RADIUS = 1e-2

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def as_wavenumber(xi) -> np.ndarray:
    """Return ``xi`` as a float array with the component axis last."""
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def tolerance_zero(h: float = 1.0) -> float:
    return ZERO_TOL / h


def omega_semidiscrete(xi, h: float = 1.0, d: int | None = None):
    """Finite-difference dispersion relation ``omega_{d,h}(xi)``.

    Parameters
    ----------
    xi : array_like, shape (..., d)
        Wave number(s).
    h : float
        Mesh size.
    d : int, optional
        Expected dimension; checked against the last axis when given.
    """
    xi = as_wavenumber(xi)
    if d is not None and xi.shape[-1] != d:
        raise ValueError(f"wave number has {xi.shape[-1]} components, expected {d}")
    s = np.sin(0.5 * h * xi)
    return (2.0 / h) * np.sqrt(np.sum(s * s, axis=-1))


def omega_continuous(xi):
    """Continuous dispersion relation ``|xi|``."""
    return np.linalg.norm(as_wavenumber(xi), axis=-1)


def _check_nondegenerate(omega, h: float) -> None:
    if np.any(omega <= tolerance_zero(h)):
        raise DegenerateWaveNumber(
            "omega_{d,h} vanishes (below %.3g) at the requested wave number" % tolerance_zero(h)
        )


def group_velocity(xi, h: float = 1.0, d: int | None = None) -> np.ndarray:
    """Gradient of ``omega_{d,h}``: ``sin(xi_k h) / (h omega)`` per component."""
    xi = as_wavenumber(xi)
    om = omega_semidiscrete(xi, h, d)
    _check_nondegenerate(om, h)
    return np.sin(h * xi) / (h * om[..., None])


def omega_derivatives(eta):
    """Value, gradient, Hessian and third-derivative tensor of ``omega_{d,1}``.

    Uses ``omega = sqrt(S)`` with ``S = 2 sum_k (1 - cos eta_k)``, whose
    derivatives are diagonal.  Shapes are ``(...)``, ``(..., d)``,
    ``(..., d, d)`` and ``(..., d, d, d)``.
    """
    eta = as_wavenumber(eta)
    d = eta.shape[-1]
    om = omega_semidiscrete(eta, 1.0)
    _check_nondegenerate(om, 1.0)
    if d == 1:
        # omega = 2 |sin(eta / 2)|; closed form avoids the 1/omega^5 cancellation
        u = 0.5 * eta[..., 0]
        sg = np.sign(np.sin(u))
        grad = (sg * np.cos(u))[..., None]
        hess = (-0.5 * sg * np.sin(u))[..., None, None]
        third = (-0.25 * sg * np.cos(u))[..., None, None, None]
        return om, grad, hess, third
    eye = np.eye(d)
    s1 = 2.0 * np.sin(eta)
    s2 = np.einsum("...k,kl->...kl", 2.0 * np.cos(eta), eye)
    s3 = np.einsum("...k,kl,km->...klm", -2.0 * np.sin(eta), eye, eye)

    w = om[..., None]
    grad = s1 / (2.0 * w)
    w = om[..., None, None]
    hess = s2 / (2.0 * w) - np.einsum("...k,...l->...kl", s1, s1) / (4.0 * w**3)
    w = om[..., None, None, None]
    cross = (
        np.einsum("...kl,...m->...klm", s2, s1)
        + np.einsum("...km,...l->...klm", s2, s1)
        + np.einsum("...lm,...k->...klm", s2, s1)
    )
    third = (
        s3 / (2.0 * w)
        - cross / (4.0 * w**3)
        + 3.0 * np.einsum("...k,...l,...m->...klm", s1, s1, s1) / (8.0 * w**5)
    )
    return om, grad, hess, third


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices ``alpha`` in ``N^d`` with ``|alpha| = order``."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), order):
        alpha = [0] * d
        for k in combo:
            alpha[k] += 1
        out.append(tuple(alpha))
    return out


def multi_factorial(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def tensor_index(alpha) -> tuple[int, ...]:
    """Tensor index (k, l, ...) of the partial derivative ``D^alpha``."""
    return tuple(k for k, a in enumerate(alpha) for _ in range(a))


@dataclass(frozen=True)
class TaylorSplit:
    """Second-order Taylor split of ``omega(eta) = omega_{d,1}(eta + eta0)``.

    ``omega = L + D + R`` with ``L`` affine, ``D`` the quadratic term and ``R``
    the remainder, all in the shifted variable ``eta``.
    """

    base: np.ndarray
    omega0: float
    grad0: np.ndarray
    hess0: np.ndarray
    third0: np.ndarray

    @property
    def d(self) -> int:
        return self.base.shape[0]

    def omega(self, eta):
        return omega_semidiscrete(as_wavenumber(eta) + self.base, 1.0)

    def linear(self, eta):
        return self.omega0 + as_wavenumber(eta) @ self.grad0

    def quadratic(self, eta):
        eta = as_wavenumber(eta)
        return 0.5 * np.einsum("...k,kl,...l->...", eta, self.hess0, eta)

    def cubic(self, eta):
        """Leading term ``sum_{|alpha|=3} D^alpha omega(0) eta^alpha / alpha!``."""
        eta = as_wavenumber(eta)
        return np.einsum("klm,...k,...l,...m->...", self.third0, eta, eta, eta) / 6.0

    def remainder(self, eta):
        """``R(eta) = omega - L - D``; integral form for ``|eta| < SERIES_RADIUS``."""
        eta = as_wavenumber(eta)
        r = np.array(self.omega(eta) - self.linear(eta) - self.quadratic(eta), dtype=float)
        small = np.linalg.norm(eta, axis=-1) < SERIES_RADIUS
        if np.any(small):
            r[small] = self._remainder_quadrature(eta[small])
        return r

    def _remainder_quadrature(self, eta: np.ndarray) -> np.ndarray:
        # R = (1/2) int_0^1 (1 - l)^2 T(l eta)[eta, eta, eta] dl by Gauss-Legendre
        lam = 0.5 * (_GL_NODES + 1.0)
        w = 0.5 * _GL_WEIGHTS * (1.0 - lam) ** 2
        pts = self.base + lam[:, None, None] * eta[None]
        third = omega_derivatives(pts)[3]
        vals = np.einsum("qnklm,nk,nl,nm->qn", third, eta, eta, eta)
        return 0.5 * np.einsum("q,qn->n", w, vals)

    @cached_property
    def third_by_multi_index(self) -> dict[tuple[int, ...], float]:
        return {a: float(self.third0[tensor_index(a)]) for a in multi_indices(self.d, 3)}


def taylor_split(eta0) -> TaylorSplit:
    eta0 = as_wavenumber(eta0)
    if eta0.ndim != 1:
        raise ValueError("taylor_split expects a single wave number")
    om, grad, hess, third = omega_derivatives(eta0)
    return TaylorSplit(
        base=eta0.copy(), omega0=float(om), grad0=grad, hess0=hess, third0=third
    )


def remainder_integral(split: TaylorSplit, eta, nodes: int = 40) -> float:
    """Integral form ``sum_{|a|=3} (3/a!) eta^a int_0^1 (1-l)^2 D^a omega(l eta) dl``.

    Gauss-Legendre on ``nodes`` points; used as an independent check of
    :meth:`TaylorSplit.remainder`.
    """
    eta = as_wavenumber(eta)

    def integrand(lam):
        _, _, _, t3 = omega_derivatives(split.base + lam * eta)
        return (1.0 - lam) ** 2 * np.einsum("klm,k,l,m->", t3, eta, eta, eta)

    val, _ = integrate.fixed_quad(np.vectorize(integrand), 0.0, 1.0, n=nodes)
    # sum over multi-indices of (3/alpha!) D^alpha eta^alpha == (1/2) T[eta, eta, eta]
    return 0.5 * float(val)


def _ball_samples(d: int, radius: float) -> np.ndarray:
    per_axis = [64] * min(d, 2) + [8] * max(d - 2, 0)
    axes = [np.linspace(-radius, radius, n) for n in per_axis]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = pts[np.linalg.norm(pts, axis=1) <= radius]
    extremes = np.concatenate([radius * np.eye(d), -radius * np.eye(d), np.zeros((1, d))])
    pts = np.concatenate([pts, extremes])
    if d >= 2:
        # boundary circle in every coordinate plane
        ang = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
        ring = []
        for k, l in itertools.combinations(range(d), 2):
            p = np.zeros((ang.size, d))
            p[:, k] = radius * np.cos(ang)
            p[:, l] = radius * np.sin(ang)
            ring.append(p)
        pts = np.concatenate([pts] + ring)
    return pts


def _polish_max(fun, x0: np.ndarray, radius: float, step: float) -> float:
    """Local refinement of a sampled maximum of ``fun`` over the ball."""
    d = x0.shape[0]
    if d == 1:
        lo = max(-radius, x0[0] - step)
        hi = min(radius, x0[0] + step)
        res = optimize.minimize_scalar(
            lambda s: -fun(np.array([s])), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-14},
        )
        return max(fun(x0), -res.fun)
    cons = {"type": "ineq", "fun": lambda x: radius**2 - x @ x}
    res = optimize.minimize(lambda x: -fun(x), x0, method="SLSQP", constraints=[cons],
                            options={"ftol": 1e-15, "maxiter": 200})
    best = fun(x0)
    if res.x @ res.x <= radius**2 * (1 + 1e-12):
        best = max(best, -res.fun)
    return best


def third_derivative_sups(eta0, radius: float) -> dict[tuple[int, ...], float]:
    """``||D^alpha omega||_{L^inf(B(0, radius))}`` for every ``|alpha| = 3``.

    Dense sampling of the ball (64 points per axis in the first two
    dimensions, 8 beyond, plus centre and axis extremes) followed by a local
    polish of the best sample.
    """
    eta0 = as_wavenumber(eta0)
    d = eta0.shape[0]
    if d == 1:
        # third derivative is cos((eta + eta0) / 2) / 4 up to sign, smooth in absolute value
        def f1(x):
            return 0.25 * float(np.abs(np.cos(0.5 * (x[0] + eta0[0]))))

        grid = np.linspace(-radius, radius, 4097)
        vals = 0.25 * np.abs(np.cos(0.5 * (grid + eta0[0])))
        best = int(np.argmax(vals))
        return {(3,): _polish_max(f1, grid[best:best + 1], radius, grid[1] - grid[0])}
    pts = _ball_samples(d, radius)
    _, _, _, third = omega_derivatives(pts + eta0)
    step = 2.0 * radius / 63.0
    sups = {}
    for alpha in multi_indices(d, 3):
        idx = (Ellipsis,) + tensor_index(alpha)
        vals = np.abs(third[idx])
        best = int(np.argmax(vals))

        def fun(x, idx=idx):
            return float(np.abs(omega_derivatives(eta0 + x)[3][idx]))

        sups[alpha] = _polish_max(fun, pts[best], radius, step)
    return sups


@dataclass(frozen=True)
class RemainderConstant:
    """Constants of the remainder-ratio estimate.

    ``c_omega = (sum_{|a|=3} ||D^a omega||_inf / a!)^2`` over ``B(0, radius)``
    and ``c_profile = || |.|^3 phi_hat ||^2 / || phi_hat ||^2``.
    """

    c_omega: float
    c_profile: float
    radius: float

    @property
    def value(self) -> float:
        return self.c_omega * self.c_profile


def remainder_constant(eta0, radius: float, profile) -> RemainderConstant:
    if radius <= 0:
        raise ValueError("radius must be positive")
    eta0 = as_wavenumber(eta0)
    sups = third_derivative_sups(eta0, radius)
    c_omega = sum(v / multi_factorial(a) for a, v in sups.items()) ** 2
    c_profile = profile.moment_ratio(eta0.shape[0], 3)
    return RemainderConstant(c_omega=c_omega, c_profile=c_profile, radius=radius)


def ray_position(x_star, eta0, t: float, sign: int = -1) -> np.ndarray:
    """Point ``x* + sign * t * grad omega_{d,1}(eta0)`` on a semi-discrete ray.

    ``sign=-1`` is the ray followed by the packets built in :mod:`sdwave.packets`
    (their time factor is ``exp(+i omega t)``).
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    x_star = as_wavenumber(x_star)
    return x_star + sign * t * group_velocity(eta0, 1.0)
