"""Periodic stand-in for the uniform grid ``h Z^d`` and its semi-discrete Fourier transform.

Nodes are ``x_j = h j`` for ``j`` in the centred box ``{-M/2, ..., M/2 - 1}^d``
and the dual frequencies are ``xi_k = 2 pi k / (M h)`` over the same index box,
so they fill ``[-pi/h, pi/h)^d``.  Arrays are stored in this centred order.

Normalisation: the forward transform carries the ``h^d`` weight,

    F(xi) = h^d sum_j f_j exp(-i xi . x_j),
    f_j   = (M h)^{-d} sum_xi F(xi) exp(i xi . x_j),

so that ``||f||_{l2}^2 = h^d sum |f_j|^2 = (M h)^{-d} sum |F|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

Region = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, None]


@dataclass(frozen=True)
class PeriodicLattice:
    d: int
    h: float
    M: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.h <= 0:
            raise ValueError("mesh size must be positive")
        if self.M < 2 or self.M % 2:
            raise ValueError("nodes per dimension must be a positive even integer")

    @property
    def L(self) -> float:
        """Half extent of the box, ``M h = 2 L``."""
        return 0.5 * self.M * self.h

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def dual_weight(self) -> float:
        """Parseval weight ``(2 pi)^{-d} (dual cell volume) = (M h)^{-d}``."""
        return (self.M * self.h) ** (-self.d)

    def axis(self) -> np.ndarray:
        return self.h * np.arange(-self.M // 2, self.M // 2)

    def dual_axis(self) -> np.ndarray:
        return (2.0 * np.pi / (self.M * self.h)) * np.arange(-self.M // 2, self.M // 2)

    def grids(self) -> list[np.ndarray]:
        """Sparse broadcastable coordinate arrays, one per axis."""
        return np.meshgrid(*([self.axis()] * self.d), indexing="ij", sparse=True)

    def dual_grids(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.dual_axis()] * self.d), indexing="ij", sparse=True)

    def nodes(self) -> np.ndarray:
        """Dense node coordinates, shape ``shape + (d,)``."""
        return np.stack(np.broadcast_arrays(*self.grids()), axis=-1)

    def frequencies(self) -> np.ndarray:
        """Dense dual-grid frequencies, shape ``shape + (d,)``."""
        return np.stack(np.broadcast_arrays(*self.dual_grids()), axis=-1)

    def radius_squared(self) -> np.ndarray:
        return sum(g * g for g in self.grids())

    @classmethod
    def with_half_extent(cls, d: int, h: float, L_min: float, power_of_two: bool = True):
        """Smallest lattice with ``M h / 2 >= L_min`` (``M`` a power of two by default)."""
        m = max(2, math.ceil(2.0 * L_min / h - 1e-9))
        if power_of_two:
            m = 1 << (m - 1).bit_length()
        elif m % 2:
            m += 1
        return cls(d=d, h=h, M=m)

    @classmethod
    def for_packet(cls, spec, T: float, hess_norm: float | None = None):
        """Box sized for a packet followed up to time ``T``.

        ``L >= |x*| + T + 12/gamma + 12 sqrt(T h / 2) (1 + ||hess0||)``: the
        group speed is at most 1, ``12/gamma`` holds the Gaussian envelope, and
        the last term covers the Schroedinger-type spreading.
        """
        if hess_norm is None:
            hess_norm = float(np.linalg.norm(spec.split.hess0, 2))
        x_norm = float(np.linalg.norm(spec.x_star))
        L_min = (
            x_norm + T + 12.0 / spec.gamma + 12.0 * math.sqrt(T * spec.h / 2.0) * (1.0 + hess_norm)
        )
        return cls.with_half_extent(len(spec.eta0), spec.h, L_min)


class _Field:
    __slots__ = ("lattice", "values")

    def __init__(self, lattice: PeriodicLattice, values):
        arr = np.array(values, dtype=complex)
        if arr.shape != lattice.shape:
            raise ValueError(f"field shape {arr.shape} does not match lattice {lattice.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}(lattice={self.lattice!r})"

    def _same(self, other):
        if not isinstance(other, type(self)) or other.lattice != self.lattice:
            raise TypeError("fields must share type and lattice")
        return other.values

    def __add__(self, other):
        return type(self)(self.lattice, self.values + self._same(other))

    def __sub__(self, other):
        return type(self)(self.lattice, self.values - self._same(other))

    def __mul__(self, c):
        return type(self)(self.lattice, self.values * c)

    __rmul__ = __mul__


class LatticeField(_Field):
    """Complex samples on the nodes of a :class:`PeriodicLattice`."""


class SpectralField(_Field):
    """Complex samples on the dual grid of a :class:`PeriodicLattice`."""


def _axes(d):
    return tuple(range(d))


def sdft_forward(f: LatticeField) -> SpectralField:
    lat = f.lattice
    ax = _axes(lat.d)
    F = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes=ax), axes=ax), axes=ax)
    return SpectralField(lat, lat.cell_volume * F)


def sdft_inverse(F: SpectralField) -> LatticeField:
    lat = F.lattice
    ax = _axes(lat.d)
    f = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(F.values, axes=ax), axes=ax), axes=ax)
    return LatticeField(lat, f / lat.cell_volume)


def discrete_gradient(f: LatticeField) -> list[LatticeField]:
    """Forward differences ``(f_{.+e_k} - f) / h`` with periodic wrap."""
    lat = f.lattice
    return [
        LatticeField(lat, (np.roll(f.values, -1, axis=k) - f.values) / lat.h)
        for k in range(lat.d)
    ]


def discrete_laplacian(f: LatticeField) -> LatticeField:
    lat = f.lattice
    v = f.values
    out = np.zeros_like(v)
    for k in range(lat.d):
        out += np.roll(v, -1, axis=k) - 2.0 * v + np.roll(v, 1, axis=k)
    return LatticeField(lat, out / lat.h**2)


def inner(f: LatticeField, g: LatticeField) -> complex:
    """``h^d sum_j f_j conj(g_j)``."""
    return complex(f.lattice.cell_volume * np.vdot(g.values, f.values))


def l2_norm(f: LatticeField) -> float:
    return math.sqrt(f.lattice.cell_volume * float(np.sum(np.abs(f.values) ** 2)))


def spectral_l2_norm(F: SpectralField) -> float:
    """Spectral side of Parseval: ``sqrt((M h)^{-d} sum |F|^2)``."""
    return math.sqrt(F.lattice.dual_weight * float(np.sum(np.abs(F.values) ** 2)))


def h1_seminorm(f: LatticeField) -> float:
    return math.sqrt(sum(l2_norm(g) ** 2 for g in discrete_gradient(f)))


def exterior_of_unit_ball(x: np.ndarray) -> np.ndarray:
    """Default observation region ``|x| >= 1``; ``x`` has the component axis last."""
    return np.sum(x * x, axis=-1) >= 1.0


def region_mask(lattice: PeriodicLattice, region: Region = None) -> np.ndarray:
    """Boolean node mask of ``region`` (callable on coordinates, or a ready mask)."""
    if region is None:
        return lattice.radius_squared() >= 1.0
    if callable(region):
        return np.broadcast_to(np.asarray(region(lattice.nodes()), dtype=bool), lattice.shape)
    mask = np.asarray(region, dtype=bool)
    if mask.shape != lattice.shape:
        raise ValueError("region mask does not match the lattice")
    return mask


def masked_l2_norm(f: LatticeField, region: Region = None) -> float:
    """``h^d`` weighted norm restricted to nodes in ``region`` (default ``|x| >= 1``)."""
    mask = region_mask(f.lattice, region)
    return math.sqrt(f.lattice.cell_volume * float(np.sum(np.abs(f.values[mask]) ** 2)))


def boundary_mass_fraction(f: LatticeField, width: float | None = None) -> float:
    """Fraction of ``|f|^2`` within ``width`` (default ``2h``) of the box faces.

    Measures wrap-around contamination of the periodic truncation.
    """
    lat = f.lattice
    width = 2.0 * lat.h if width is None else width
    near = np.zeros(lat.shape, dtype=bool)
    lo, hi = -lat.L, lat.L - lat.h
    for g in lat.grids():
        near |= np.broadcast_to((g - lo < width - 1e-12) | (hi - g < width - 1e-12), lat.shape)
    w = np.abs(f.values) ** 2
    total = float(np.sum(w))
    return float(np.sum(w[near])) / total if total > 0 else 0.0


def spectral_derivative(f: LatticeField, alpha: Sequence[int]) -> LatticeField:
    """``D^alpha f`` with the multiplier ``(i xi)^alpha`` (band-limited interpretation)."""
    F = sdft_forward(f).values
    mult = np.ones(f.lattice.shape, dtype=complex)
    for k, (g, a) in enumerate(zip(f.lattice.dual_grids(), alpha)):
        if a:
            mult = mult * (1j * g) ** a
    return sdft_inverse(SpectralField(f.lattice, F * mult))
