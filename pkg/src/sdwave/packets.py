"""Concentrated high-frequency initial data and packet diagnostics.

The packet centred at ``x*`` around the wave number ``xi0 = eta0 / h`` with
spectral width ``gamma`` has SDFT data

    phi0_hat(xi) = (1 / (i omega_{d,h}(xi))) (2 pi / gamma)^{d/2}
                   phi_hat((xi - xi0) / gamma) exp(-i x* . (xi - xi0)),
    phi1_hat(xi) = i omega_{d,h}(xi) phi0_hat(xi),

restricted to the Brillouin zone.  It is the one-sided mode whose time factor
is ``exp(+i omega t)``, so its envelope travels along ``x* - t grad omega``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import dispersion
from .errors import ZeroMass, ZeroModeSignificant
from .lattice import LatticeField, PeriodicLattice, SpectralField, sdft_inverse
from .profiles import GAUSSIAN, Profile

log = logging.getLogger(__name__)

#: threshold standing for "much less than one" in the scale report
SCALE_THRESHOLD = 0.2


@dataclass(frozen=True)
class PacketSpec:
    """Recipe for the packet initial data.

    ``eta0`` is the normalised wave number ``h xi0`` in ``[-pi, pi]^d``.
    """

    x_star: tuple[float, ...]
    eta0: tuple[float, ...]
    gamma: float
    h: float
    T: float = 1.0
    profile: Profile = GAUSSIAN
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "x_star", tuple(float(v) for v in np.atleast_1d(self.x_star)))
        object.__setattr__(self, "eta0", tuple(float(v) for v in np.atleast_1d(self.eta0)))
        if len(self.x_star) != len(self.eta0):
            raise ValueError("x_star and eta0 must have the same dimension")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if not self.check:
            return
        if np.linalg.norm(self.x_star) >= 1.0:
            raise ValueError("x_star must lie inside the unit ball")
        if np.any(np.abs(self.eta0) > np.pi):
            raise ValueError("eta0 must lie in [-pi, pi]^d")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.h * self.gamma >= 1.0:
            raise ValueError("h * gamma must be below 1")
        if dispersion.omega_semidiscrete(self.eta0, 1.0) <= dispersion.tolerance_zero(1.0):
            raise dispersion.DegenerateWaveNumber("omega vanishes at eta0")

    @property
    def d(self) -> int:
        return len(self.eta0)

    @property
    def xi0(self) -> np.ndarray:
        return np.asarray(self.eta0) / self.h

    @cached_property
    def split(self) -> dispersion.TaylorSplit:
        return dispersion.taylor_split(self.eta0)

    def lattice(self, T: float | None = None) -> PeriodicLattice:
        """Default periodic box for following this packet up to ``T``."""
        return PeriodicLattice.for_packet(self, self.T if T is None else T)


def _check_lattice(spec: PacketSpec, lattice: PeriodicLattice) -> None:
    if lattice.d != spec.d or not math.isclose(lattice.h, spec.h, rel_tol=1e-12):
        raise ValueError("lattice does not match the packet dimension / mesh size")


CUTOFFS = ("zone", "periodic")


def amplitude_at(spec: PacketSpec, xi: np.ndarray, cutoff: str = "zone") -> np.ndarray:
    """Packet amplitude ``(2 pi/gamma)^{d/2} phi_hat((xi - xi0)/gamma) exp(-i x*.(xi - xi0))``.

    ``xi`` has shape ``(..., d)`` and may be complex (analytic continuation).
    With ``cutoff="zone"`` the amplitude is the single copy restricted to the
    Brillouin zone; with ``"periodic"`` the zone restriction is dropped, which
    on the lattice folds the neighbouring copies ``xi0 + 2 pi n / h`` back in.
    """
    if cutoff not in CUTOFFS:
        raise ValueError(f"cutoff must be one of {CUTOFFS}")
    x_star = np.asarray(spec.x_star)
    norm = (2.0 * np.pi / spec.gamma) ** (spec.d / 2.0)
    period = 2.0 * np.pi / spec.h
    shifts = [np.zeros(spec.d)]
    if cutoff == "periodic":
        shifts = [period * np.array(n, dtype=float)
                  for n in np.ndindex(*([3] * spec.d))]
        shifts = [s - period for s in shifts]
    out = 0.0
    for s in shifts:
        off = xi - spec.xi0 + s
        out = out + norm * spec.profile(off / spec.gamma) * np.exp(-1j * (off @ x_star))
    return out


def packet_amplitude(spec: PacketSpec, lattice: PeriodicLattice, cutoff: str = "zone") -> np.ndarray:
    """Packet amplitude sampled on the lattice dual grid."""
    _check_lattice(spec, lattice)
    return amplitude_at(spec, lattice.frequencies(), cutoff)


def neglected_zone_mass(spec: PacketSpec, lattice: PeriodicLattice) -> float:
    """Fraction of the packet's spectral mass falling outside the Brillouin zone.

    Measured on the lattice-spaced grid of offsets ``xi - xi0`` spanning
    ``[-pi/h, pi/h)^d``; this is the mass dropped by the zone cutoff.
    """
    _check_lattice(spec, lattice)
    off = lattice.frequencies()
    w = np.abs(spec.profile(off / spec.gamma)) ** 2
    outside = np.any(np.abs(off + spec.xi0) > np.pi / spec.h, axis=-1)
    return float(np.sum(w[outside]) / np.sum(w))


def build_initial_data(spec: PacketSpec, lattice: PeriodicLattice, cutoff: str = "zone"):
    """Spectral initial data ``(phi0_hat, phi1_hat)`` on the lattice dual grid.

    The ``xi = 0`` mode of ``phi0_hat`` (where ``1/omega`` is singular) is set
    to zero; :class:`ZeroModeSignificant` is raised if the packet amplitude
    there exceeds ``1e-12`` of its peak.  ``cutoff`` is passed to
    :func:`amplitude_at`.
    """
    amp = packet_amplitude(spec, lattice, cutoff)
    omega = dispersion.omega_semidiscrete(lattice.frequencies(), spec.h)
    zero = (lattice.M // 2,) * lattice.d
    peak = (2.0 * np.pi / spec.gamma) ** (spec.d / 2.0) * float(
        np.max(np.abs(spec.profile(np.zeros(spec.d))))
    )
    at_zero = abs(complex(amplitude_at(spec, np.zeros(spec.d), cutoff)))
    if at_zero > 1e-12 * peak:
        raise ZeroModeSignificant(
            f"packet amplitude at xi=0 is {at_zero / peak:.3g} of its peak"
        )
    safe = np.where(omega > 0, omega, 1.0)
    phi0 = amp / (1j * safe)
    phi0[zero] = 0.0
    phi1 = 1j * omega * phi0
    return SpectralField(lattice, phi0), SpectralField(lattice, phi1)


def physical_space_data(spec: PacketSpec, lattice: PeriodicLattice, cutoff: str = "zone"):
    phi0, phi1 = build_initial_data(spec, lattice, cutoff)
    return sdft_inverse(phi0), sdft_inverse(phi1)


def wide_gaussian(spec: PacketSpec, lattice: PeriodicLattice) -> LatticeField:
    """Closed-form ``exp(-gamma |x|^2 / 2) exp(i xi0 . x)`` centred at ``x*``.

    Only a diagnostic: its physical width is ``gamma^{-1/2}`` whereas the
    packet data above have width ``1/gamma``.
    """
    x = lattice.nodes() - np.asarray(spec.x_star)
    vals = np.exp(-0.5 * spec.gamma * np.sum(x * x, axis=-1)) * np.exp(1j * (x @ spec.xi0))
    return LatticeField(lattice, vals)


@dataclass(frozen=True)
class ScaleReport:
    inv_gamma: float
    h_gamma: float
    gamma_h23: float
    gamma_h12: float
    flags: dict
    threshold: float


def _flag(value: float, threshold: float) -> str:
    if value < threshold:
        return "pass"
    if value < 1.0:
        return "marginal"
    return "fail"


def validate_scales(spec_or_h, gamma: float | None = None,
                    threshold: float = SCALE_THRESHOLD) -> ScaleReport:
    """Dimensionless scale numbers ``1/gamma``, ``h gamma``, ``gamma h^{2/3}``, ``gamma h^{1/2}``.

    The first three should be small (``< threshold`` flags "pass",
    ``< 1`` "marginal"); ``gamma h^{1/2}`` is reported without a flag, its
    critical value being 1.
    """
    if isinstance(spec_or_h, PacketSpec):
        h, gamma = spec_or_h.h, spec_or_h.gamma
    else:
        h = float(spec_or_h)
    vals = {
        "inv_gamma": 1.0 / gamma,
        "h_gamma": h * gamma,
        "gamma_h23": gamma * h ** (2.0 / 3.0),
    }
    flags = {k: _flag(v, threshold) for k, v in vals.items()}
    for k, f in flags.items():
        if f != "pass":
            log.warning("scale %s = %.4g is %s (threshold %.3g)", k, vals[k], f, threshold)
    return ScaleReport(gamma_h12=gamma * math.sqrt(h), flags=flags, threshold=threshold, **vals)


def ray_stays_hidden(spec: PacketSpec) -> bool:
    """True iff ``|x* - t grad omega_{d,1}(eta0)| < 1`` for all ``t`` in ``[0, T]``.

    The distance is convex along the straight ray, so its maximum is attained
    at ``t = 0`` or ``t = T``.
    """
    g = dispersion.group_velocity(spec.eta0, 1.0)
    x = np.asarray(spec.x_star)
    return bool(max(np.linalg.norm(x), np.linalg.norm(x - spec.T * g)) < 1.0)


@dataclass(frozen=True)
class PacketDiagnostics:
    centroid: np.ndarray
    spread: np.ndarray
    mass: float


def packet_diagnostics(f: LatticeField) -> PacketDiagnostics:
    """Centroid and componentwise spread of ``|f|^2``, plus its ``l2`` mass."""
    lat = f.lattice
    w = np.abs(f.values) ** 2
    total = float(np.sum(w))
    if total <= 0.0:
        raise ZeroMass("field has zero mass")
    centroid = np.empty(lat.d)
    spread = np.empty(lat.d)
    for k, g in enumerate(lat.grids()):
        # marginal along axis k
        other = tuple(a for a in range(lat.d) if a != k)
        marg = np.sum(w, axis=other) if other else w
        x = g.reshape(-1)
        c = float(np.sum(marg * x)) / total
        centroid[k] = c
        spread[k] = math.sqrt(max(float(np.sum(marg * (x - c) ** 2)) / total, 0.0))
    return PacketDiagnostics(centroid=centroid, spread=spread, mass=lat.cell_volume * total)
