"""The packet ``u`` and its splitting ``u exp(-i t omega(0) / h) = v + v_R``.

Everything is computed in the demodulated frame: the offset frequency
``xi - xi0`` is sampled on the lattice dual grid and the returned fields are
evaluated at ``x = x_j - x*``.  With ``omega(eta) = omega_{d,1}(eta + eta0)``,

    u   = IFT[ A(xi) exp(i t omega(xi h) / h) ]
    v   = IFT[ A(xi) exp(i t grad omega(0) . xi + i t D(xi h) / h) ]
    v_R = IFT[ A(xi) exp(i t grad omega(0) . xi + i t D(xi h) / h) (exp(i t R(xi h) / h) - 1) ]

where ``A(xi) = (2 pi / gamma)^{d/2} phi_hat(xi / gamma)`` and ``D``, ``R`` are
the quadratic Taylor term and the remainder of ``omega`` at 0.  The packet's
zone cutoff is dropped here; its mass is measured and reported.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dispersion import TaylorSplit, remainder_constant
from .errors import CutoffMassSignificant
from .lattice import LatticeField, PeriodicLattice, SpectralField, l2_norm, sdft_inverse
from .packets import PacketSpec, neglected_zone_mass


@dataclass(frozen=True)
class SplitFields:
    u: LatticeField
    v: LatticeField
    v_r: LatticeField
    time: float
    split: TaylorSplit
    gamma: float
    h: float
    cutoff_mass: float = 0.0

    def identity_residual(self) -> float:
        """``||u exp(-i t omega(0)/h) - v - v_R|| / ||u||``."""
        phase = np.exp(-1j * self.time * self.split.omega0 / self.h)
        diff = LatticeField(self.u.lattice, self.u.values * phase - self.v.values - self.v_r.values)
        return l2_norm(diff) / l2_norm(self.u)


def _lattice(spec: PacketSpec, lattice: PeriodicLattice | None, t: float) -> PeriodicLattice:
    lattice = spec.lattice(max(t, spec.T)) if lattice is None else lattice
    if lattice.d != spec.d or not math.isclose(lattice.h, spec.h, rel_tol=1e-12):
        raise ValueError("lattice does not match the packet dimension / mesh size")
    return lattice


def _cutoff_mass(spec, lattice, cutoff_tol):
    mass = neglected_zone_mass(spec, lattice)
    if cutoff_tol is not None and mass > cutoff_tol:
        raise CutoffMassSignificant(
            f"{mass:.3g} of the spectral mass lies outside the Brillouin zone (tol {cutoff_tol:.1g})"
        )
    return mass


def _base(spec: PacketSpec, lattice: PeriodicLattice):
    """Offset frequencies, scaled frequencies ``xi h`` and the amplitude ``A``."""
    xi = lattice.frequencies()
    norm = (2.0 * np.pi / spec.gamma) ** (spec.d / 2.0)
    amp = norm * spec.profile(xi / spec.gamma) * np.exp(-1j * (xi @ np.asarray(spec.x_star)))
    return xi, xi * spec.h, amp


def _ift(lattice, values) -> LatticeField:
    return sdft_inverse(SpectralField(lattice, values))


def _v_integrand(spec, xi, eta, amp, t):
    split = spec.split
    return amp * np.exp(1j * t * (xi @ split.grad0) + 1j * t * split.quadratic(eta) / spec.h)


def compute_u(spec: PacketSpec, lattice: PeriodicLattice | None = None, t: float = 0.0,
              cutoff_tol: float | None = None) -> LatticeField:
    """The packet ``u(x, t)`` at ``x = x_j - x*``.

    Relation to the lattice solution: ``d/dt phi_j(t) = exp(i xi0 . x_j) u(x_j - x*, t)``
    up to the zone-cutoff mass (exact for ``cutoff="periodic"`` data).
    ``cutoff_tol`` turns the cutoff-mass report into a check.
    """
    lattice = _lattice(spec, lattice, t)
    _cutoff_mass(spec, lattice, cutoff_tol)
    _, eta, amp = _base(spec, lattice)
    return _ift(lattice, amp * np.exp(1j * t * spec.split.omega(eta) / spec.h))


def compute_v(spec: PacketSpec, lattice: PeriodicLattice | None = None, t: float = 0.0,
              cutoff_tol: float | None = None, split: TaylorSplit | None = None) -> LatticeField:
    """Transport plus quadratic phase part of the packet.

    ``split`` overrides the packet's Taylor data (e.g. with a zeroed Hessian).
    """
    lattice = _lattice(spec, lattice, t)
    _cutoff_mass(spec, lattice, cutoff_tol)
    xi, eta, amp = _base(spec, lattice)
    split = spec.split if split is None else split
    phase = 1j * t * (xi @ split.grad0) + 1j * t * split.quadratic(eta) / spec.h
    return _ift(lattice, amp * np.exp(phase))


def remainder_multiplier(spec: PacketSpec, lattice: PeriodicLattice, t: float) -> np.ndarray:
    """``exp(i t R(xi h) / h) - 1`` on the dual grid."""
    eta = lattice.frequencies() * spec.h
    return np.expm1(1j * t * spec.split.remainder(eta) / spec.h)


def compute_v_r(spec: PacketSpec, lattice: PeriodicLattice | None = None, t: float = 0.0,
                cutoff_tol: float | None = None) -> LatticeField:
    lattice = _lattice(spec, lattice, t)
    _cutoff_mass(spec, lattice, cutoff_tol)
    xi, eta, amp = _base(spec, lattice)
    mult = remainder_multiplier(spec, lattice, t)
    return _ift(lattice, _v_integrand(spec, xi, eta, amp, t) * mult)


def split_fields(spec: PacketSpec, lattice: PeriodicLattice | None = None, t: float = 0.0,
                 cutoff_tol: float | None = None) -> SplitFields:
    """``u``, ``v`` and ``v_R`` at time ``t`` from one set of samples."""
    lattice = _lattice(spec, lattice, t)
    mass = _cutoff_mass(spec, lattice, cutoff_tol)
    xi, eta, amp = _base(spec, lattice)
    v_hat = _v_integrand(spec, xi, eta, amp, t)
    u_hat = amp * np.exp(1j * t * spec.split.omega(eta) / spec.h)
    mult = np.expm1(1j * t * spec.split.remainder(eta) / spec.h)
    return SplitFields(
        u=_ift(lattice, u_hat),
        v=_ift(lattice, v_hat),
        v_r=_ift(lattice, v_hat * mult),
        time=float(t),
        split=spec.split,
        gamma=spec.gamma,
        h=spec.h,
        cutoff_mass=mass,
    )


def remainder_bound(spec: PacketSpec, t: float) -> float:
    """``c_omega c_profile h^4 gamma^6 t^2`` with the sup taken over ``B(0, h gamma)``."""
    const = remainder_constant(spec.eta0, spec.h * spec.gamma, spec.profile)
    return const.value * spec.h**4 * spec.gamma**6 * t * t


def remainder_ratio(spec: PacketSpec, lattice: PeriodicLattice | None = None, t: float = 1.0,
                    cutoff_tol: float | None = None) -> tuple[float, float]:
    """``(||v_R||^2 / ||u||^2, bound)`` at time ``t``."""
    f = split_fields(spec, lattice, t, cutoff_tol)
    ratio = (l2_norm(f.v_r) / l2_norm(f.u)) ** 2
    return ratio, remainder_bound(spec, t)


@dataclass(frozen=True)
class ScalingStudy:
    rows: list
    h_slope: float
    all_within_bound: bool


def _fit_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def scaling_study(h_list, gamma_rule=lambda h: h**-0.375, t_list=(1.0,),
                  eta0=(19 * np.pi / 20,), x_star=None, profile=None,
                  threads: int = 1) -> ScalingStudy:
    """Remainder ratios over an ``h`` sweep with ``gamma = gamma_rule(h)``.

    ``h_slope`` fits ``log(ratio / gamma^6)`` against ``log h`` at the largest
    ``t`` (removing the ``gamma(h)`` contribution).  See :func:`gamma_scaling`
    for the slope in ``gamma`` at fixed ``h``.
    """
    eta0 = tuple(np.atleast_1d(eta0).astype(float))
    x_star = (0.0,) * len(eta0) if x_star is None else tuple(np.atleast_1d(x_star))
    extra = {} if profile is None else {"profile": profile}
    t_list = tuple(float(t) for t in t_list)

    def run(h):
        gamma = float(gamma_rule(h))
        spec = PacketSpec(x_star, eta0, gamma, h, T=max(t_list), **extra)
        lattice = spec.lattice()
        out = []
        for t in t_list:
            ratio, bound = remainder_ratio(spec, lattice, t)
            out.append({"h": float(h), "gamma": gamma, "t": t, "ratio": ratio, "bound": bound,
                        "cutoff_mass": neglected_zone_mass(spec, lattice)})
        return out

    hs = sorted((float(h) for h in h_list), reverse=True)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, hs))
    else:
        chunks = [run(h) for h in hs]
    rows = [r for c in chunks for r in c]
    t_fit = max(t_list)
    sel = [r for r in rows if r["t"] == t_fit]
    h_slope = _fit_slope([r["h"] for r in sel], [r["ratio"] / r["gamma"] ** 6 for r in sel])
    return ScalingStudy(rows=rows, h_slope=h_slope,
                        all_within_bound=all(r["ratio"] <= r["bound"] for r in rows))


def gamma_scaling(h: float, gamma_list, t: float = 1.0, eta0=(19 * np.pi / 20,),
                  x_star=None, profile=None) -> tuple[list, float]:
    """Ratios at fixed ``h`` over ``gamma_list`` and the fitted ``gamma`` slope."""
    eta0 = tuple(np.atleast_1d(eta0).astype(float))
    x_star = (0.0,) * len(eta0) if x_star is None else tuple(np.atleast_1d(x_star))
    extra = {} if profile is None else {"profile": profile}
    rows = []
    for gamma in sorted(float(g) for g in gamma_list):
        spec = PacketSpec(x_star, eta0, gamma, h, T=t, **extra)
        ratio, bound = remainder_ratio(spec, None, t)
        rows.append({"h": h, "gamma": gamma, "t": t, "ratio": ratio, "bound": bound})
    slope = _fit_slope([r["gamma"] for r in rows], [r["ratio"] for r in rows])
    return rows, slope
