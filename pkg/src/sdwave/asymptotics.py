"""Asymptotic expansion of the transport/Schroedinger part ``v`` at the scale ``gamma h^{1/2} = 1``.

``v`` solves

    dv/dt = g . grad v - i h sum_{|a|=2} (1/a!) D^a omega(0) D^a v,   g = grad omega(0).

In the scaled frame ``y = x / sqrt(h)``, ``s = t / sqrt(h)`` it is expanded as

    v = sum_j h^{j/2} a_j(y, s) exp(i y . eta~ + i t omega2(eta~ / sqrt(h)))

with ``a_0`` transported by ``g`` and each ``a_{j+1}`` driven by a second-order
source built from ``a_j``.  Coefficients live on their own ``h``-independent
lattice in ``y`` and are resampled onto physical nodes by trigonometric
interpolation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import TaylorSplit, multi_factorial, multi_indices, taylor_split, tensor_index
from .errors import InsufficientSamples, QuadratureNotConverged, ZeroMass
from .lattice import (
    LatticeField,
    PeriodicLattice,
    SpectralField,
    l2_norm,
    sdft_forward,
    sdft_inverse,
    spectral_derivative,
)
from .profiles import GAUSSIAN, Profile

DUHAMEL_RTOL = 1e-10
DUHAMEL_MAX_NODES = 2**14


@dataclass(frozen=True)
class CoefficientField:
    """``a_j(., s)`` sampled on a lattice in the scaled variable ``y``."""

    order: int
    field: LatticeField
    s: float
    h: float
    eta0_tilde: tuple = ()

    @property
    def lattice(self) -> PeriodicLattice:
        return self.field.lattice

    def spectrum(self) -> np.ndarray:
        return sdft_forward(self.field).values

    def with_field(self, values, order=None, s=None) -> "CoefficientField":
        return CoefficientField(
            order=self.order if order is None else order,
            field=LatticeField(self.lattice, values),
            s=self.s if s is None else s,
            h=self.h,
            eta0_tilde=self.eta0_tilde,
        )

    def mass_outside(self, radius: float) -> float:
        """Fraction of ``|a|^2`` outside ``|y| <= radius``."""
        w = np.abs(self.field.values) ** 2
        total = float(np.sum(w))
        if total == 0.0:
            return 0.0
        return float(np.sum(w[self.lattice.radius_squared() > radius**2])) / total


@dataclass(frozen=True)
class ExpansionResult:
    J: int
    v_J: LatticeField
    term_norms: list
    errors: list | None = None
    s: float = 0.0
    h: float = 0.0


def omega2(eta, split: TaylorSplit, h: float):
    """``grad omega(0) . eta + h sum_{|a|=2} D^a omega(0) eta^a / a!``."""
    eta = np.asarray(eta, dtype=float)
    return eta @ split.grad0 + h * split.quadratic(eta)


def _eta_tilde(eta0_tilde, d):
    if eta0_tilde is None or len(np.atleast_1d(eta0_tilde)) == 0:
        return np.zeros(d)
    e = np.atleast_1d(np.asarray(eta0_tilde, dtype=float))
    if e.shape != (d,):
        raise ValueError("eta0_tilde has the wrong dimension")
    return e


def coefficient_lattice(d: int, s_max: float, profile: Profile = GAUSSIAN,
                        speed: float = 1.0, margin: float = 12.0) -> PeriodicLattice:
    """Lattice in ``y`` holding the profile's band and its transport up to ``s_max``."""
    hy = math.pi / (profile.decay_radius + 4.0)
    L = margin + speed * s_max + 0.5 * s_max
    return PeriodicLattice.with_half_extent(d, hy, L)


def matched_a0(profile: Profile, h: float, lattice: PeriodicLattice,
               eta0_tilde=None) -> CoefficientField:
    """``a_0(y, 0) = gamma^{d/2} (2 pi)^{-d/2} int phi_hat(z) exp(i z . y) dz`` with ``gamma = h^{-1/2}``.

    This reproduces the packet ``v(x, 0)`` exactly at ``y = x / sqrt(h)``.
    """
    d = lattice.d
    k = lattice.frequencies()
    amp = (2.0 * np.pi) ** (d / 2.0) * h ** (-d / 4.0) * profile(k)
    f = sdft_inverse(SpectralField(lattice, amp))
    return CoefficientField(0, f, 0.0, h, tuple(_eta_tilde(eta0_tilde, d)))


def _transport_symbol(lattice, split):
    return lattice.frequencies() @ split.grad0


def solve_a0(initial: CoefficientField, s: float, split: TaylorSplit) -> CoefficientField:
    """Exact transport ``a_0(y, s) = a_0(y + s g, 0)`` via a spectral linear phase."""
    phase = np.exp(1j * s * _transport_symbol(initial.lattice, split))
    f = sdft_inverse(SpectralField(initial.lattice, initial.spectrum() * phase))
    return CoefficientField(0, f, initial.s + s, initial.h, initial.eta0_tilde)


def source_symbol(lattice: PeriodicLattice, split: TaylorSplit, eta0_tilde=None,
                  binomial: bool = True) -> np.ndarray:
    """Fourier multiplier of ``-i sum_{|a|=2} (1/a!) D^a omega(0) sum_{b<a} c_ab (i eta~)^b D^{a-b}``.

    ``c_ab = prod_k C(a_k, b_k)`` (Leibniz) when ``binomial`` is set, else 1.
    """
    d = lattice.d
    e = _eta_tilde(eta0_tilde, d)
    k = lattice.frequencies()
    out = np.zeros(lattice.shape, dtype=complex)
    for alpha in multi_indices(d, 2):
        coef = split.hess0[tensor_index(alpha)] / multi_factorial(alpha)
        inner = np.zeros(lattice.shape, dtype=complex)
        for beta in itertools.product(*(range(a + 1) for a in alpha)):
            if beta == alpha:
                continue
            c = math.prod(math.comb(a, b) for a, b in zip(alpha, beta)) if binomial else 1
            term = c * math.prod((1j * e[i]) ** beta[i] for i in range(d))
            for i in range(d):
                if alpha[i] - beta[i]:
                    term = term * (1j * k[..., i]) ** (alpha[i] - beta[i])
            inner = inner + term
        out = out + coef * inner
    return -1j * out


def solve_cascade(a0_initial: CoefficientField, J: int, split: TaylorSplit, eta0_tilde=None,
                  s: float = 0.0, binomial: bool = True, rtol: float = DUHAMEL_RTOL,
                  max_nodes: int = DUHAMEL_MAX_NODES) -> list[CoefficientField]:
    """``[a_0(s), ..., a_J(s)]`` with zero data for ``a_{j >= 1}``.

    ``a_{j+1}(s) = int_0^s Shift(s - r) S_j(r) dr`` by composite midpoint with
    node doubling until the relative change is below ``rtol``.
    """
    if J < 0:
        raise ValueError("J must be non-negative")
    lat = a0_initial.lattice
    eta_t = _eta_tilde(eta0_tilde if eta0_tilde is not None else a0_initial.eta0_tilde, lat.d)
    gk = _transport_symbol(lat, split)
    src = source_symbol(lat, split, eta_t, binomial)
    a0_hat = a0_initial.spectrum()
    cache: dict = {}

    def shift(r):
        return np.exp(1j * r * gk)

    def a_hat(j, r):
        key = (j, r)
        if key not in cache:
            if j == 0:
                cache[key] = shift(r) * a0_hat
            elif r == 0.0:
                cache[key] = np.zeros_like(a0_hat)
            else:
                cache[key] = duhamel(j - 1, r)
        return cache[key]

    def midpoint(j, r, n):
        dr = r / n
        acc = np.zeros_like(a0_hat)
        for i in range(n):
            rho = (i + 0.5) * dr
            acc = acc + shift(r - rho) * (src * a_hat(j, rho))
        return dr * acc

    def duhamel(j, r):
        n = 1
        prev = midpoint(j, r, n)
        while 2 * n <= max_nodes:
            n *= 2
            cur = midpoint(j, r, n)
            scale = np.linalg.norm(cur)
            if np.linalg.norm(cur - prev) <= rtol * scale or scale == 0.0:
                return cur
            prev = cur
        raise QuadratureNotConverged(f"Duhamel integral for a_{j + 1} needs more than {n} nodes")

    out = []
    for j in range(J + 1):
        f = sdft_inverse(SpectralField(lat, a_hat(j, float(s))))
        out.append(CoefficientField(j, f, a0_initial.s + s, a0_initial.h, tuple(eta_t)))
    return out


def _axis_interpolation(lattice: PeriodicLattice, y: np.ndarray) -> np.ndarray:
    """Matrix evaluating a centred band-limited series at points ``y`` (zero outside the box)."""
    k = lattice.dual_axis()
    E = np.exp(1j * np.multiply.outer(y, k)) / (lattice.M * lattice.h)
    E[(y < -lattice.L) | (y > lattice.L - lattice.h)] = 0.0
    return E


def resample(coeff: CoefficientField, axes: list) -> np.ndarray:
    """Trigonometric interpolation of ``coeff`` at the tensor grid ``axes`` (one array per dim)."""
    out = coeff.spectrum()
    for ax, y in enumerate(axes):
        E = _axis_interpolation(coeff.lattice, np.asarray(y, dtype=float))
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [ax])), 0, ax)
    return out


def expansion_sum(coeffs: list, J: int, h: float, eta0_tilde, split: TaylorSplit,
                  lattice: PeriodicLattice, x_star=None, reference: LatticeField | None = None
                  ) -> ExpansionResult:
    """Partial sum ``v_J`` on the physical ``lattice`` (values at ``x_j - x*``).

    When ``reference`` is given, ``errors[j] = ||reference - v_j|| / ||reference||``
    for every partial sum ``j <= J``.
    """
    if len(coeffs) <= J:
        raise ValueError(f"need coefficients up to order {J}")
    d = lattice.d
    x_star = np.zeros(d) if x_star is None else np.atleast_1d(np.asarray(x_star, dtype=float))
    eta_t = _eta_tilde(eta0_tilde, d)
    sq = math.sqrt(h)
    axes = [(lattice.axis() - x_star[i]) / sq for i in range(d)]
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    s = coeffs[0].s
    t = s * sq
    phase = np.exp(1j * sum(g * e for g, e in zip(grids, eta_t)) + 1j * t * omega2(eta_t / sq, split, h))
    total = np.zeros(lattice.shape, dtype=complex)
    norms, errors = [], []
    ref_norm = None if reference is None else l2_norm(reference)
    for j in range(J + 1):
        term = h ** (j / 2.0) * resample(coeffs[j], axes) * phase
        total = total + term
        norms.append(l2_norm(LatticeField(lattice, term)))
        if reference is not None:
            errors.append(l2_norm(LatticeField(lattice, reference.values - total)) / ref_norm)
    return ExpansionResult(J=J, v_J=LatticeField(lattice, total), term_norms=norms,
                           errors=errors if reference is not None else None, s=s, h=h)


@dataclass(frozen=True)
class Pde15Residual:
    factorial: float
    literal: float
    dt: float


def _rhs(v: LatticeField, split: TaylorSplit, h: float, factorial: bool) -> np.ndarray:
    d = v.lattice.d
    out = np.zeros(v.lattice.shape, dtype=complex)
    for k in range(d):
        alpha = tuple(int(i == k) for i in range(d))
        out = out + split.grad0[k] * spectral_derivative(v, alpha).values
    for alpha in multi_indices(d, 2):
        c = split.hess0[tensor_index(alpha)]
        if factorial:
            c = c / multi_factorial(alpha)
        out = out - 1j * h * c * spectral_derivative(v, alpha).values
    return out


def pde15_residual(v_samples, split: TaylorSplit, h: float, dt: float) -> Pde15Residual:
    """Relative residual of the ``v`` equation at the middle sample.

    Central time differences of step ``dt`` and spectral space derivatives.
    ``factorial`` uses the ``1/a!`` weights on the second-order term, ``literal``
    drops them.  Both are normalised by the norm of the time derivative.
    """
    v_samples = list(v_samples)
    if len(v_samples) < 3:
        raise InsufficientSamples("need at least three equally spaced time samples")
    m = len(v_samples) // 2
    lat = v_samples[m].lattice
    dvdt = (v_samples[m + 1].values - v_samples[m - 1].values) / (2.0 * dt)
    scale = l2_norm(LatticeField(lat, dvdt))
    if scale == 0.0:
        raise ZeroMass("time derivative vanishes")
    res = {}
    for name, fac in (("factorial", True), ("literal", False)):
        r = dvdt - _rhs(v_samples[m], split, h, fac)
        res[name] = l2_norm(LatticeField(lat, r)) / scale
    return Pde15Residual(factorial=res["factorial"], literal=res["literal"], dt=dt)


def concentration_width(v_field: LatticeField, ray_center, h: float,
                        radii=(1, 2, 4, 8)) -> dict:
    """Fraction of ``|v|^2`` within ``r sqrt(h)`` of ``ray_center`` for each ``r``."""
    lat = v_field.lattice
    w = np.abs(v_field.values) ** 2
    total = float(np.sum(w))
    if total <= 0.0:
        raise ZeroMass("field has zero mass")
    c = np.atleast_1d(np.asarray(ray_center, dtype=float))
    dist2 = sum((g - c[k]) ** 2 for k, g in enumerate(lat.grids()))
    return {r: float(np.sum(w[dist2 <= (r * math.sqrt(h)) ** 2])) / total for r in radii}


@dataclass(frozen=True)
class ConvergenceStudy:
    rows: list
    slopes: dict = field(default_factory=dict)


def expansion_convergence(h_list, J_list=(0, 1), s: float = 1.0, eta0=(19 * np.pi / 20,),
                          profile: Profile = GAUSSIAN, binomial: bool = True) -> ConvergenceStudy:
    """``||v - v_J|| / ||v||`` at fixed scaled time ``s`` with ``gamma = h^{-1/2}`` and ``eta~ = 0``.

    ``v`` comes from the packet splitting with ``x* = 0``; slopes are
    least-squares fits of the log error against ``log h``.
    """
    from .decomposition import compute_v
    from .packets import PacketSpec

    eta0 = tuple(np.atleast_1d(eta0).astype(float))
    d = len(eta0)
    split = taylor_split(eta0)
    J_max = max(J_list)
    ylat = coefficient_lattice(d, s, profile, speed=float(np.linalg.norm(split.grad0)))
    rows = []
    for h in sorted((float(x) for x in h_list), reverse=True):
        t = s * math.sqrt(h)
        spec = PacketSpec((0.0,) * d, eta0, h**-0.5, h, T=t, profile=profile)
        lattice = spec.lattice()
        v = compute_v(spec, lattice, t)
        a0 = matched_a0(profile, h, ylat)
        coeffs = solve_cascade(a0, J_max, split, None, s, binomial)
        res = expansion_sum(coeffs, J_max, h, None, split, lattice, reference=v)
        for J in J_list:
            rows.append({"h": h, "J": J, "s": s, "t": t, "error": res.errors[J]})
    slopes = {}
    if len(set(float(x) for x in h_list)) < 2:
        return ConvergenceStudy(rows=rows, slopes=slopes)
    for J in J_list:
        sel = [r for r in rows if r["J"] == J]
        slopes[J] = float(np.polyfit(np.log([r["h"] for r in sel]),
                                     np.log([r["error"] for r in sel]), 1)[0])
    return ConvergenceStudy(rows=rows, slopes=slopes)
