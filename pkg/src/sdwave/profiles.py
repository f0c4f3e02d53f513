"""Spectral profiles ``phi_hat`` shaping the wave packets."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureNotConverged


def _unit_gaussian(zeta: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.sum(zeta * zeta, axis=-1))


@dataclass(frozen=True)
class Profile:
    """A rapidly decaying function on ``R^d``, evaluated on arrays of shape (..., d).

    Attributes
    ----------
    func
        Vectorised evaluator returning the profile values (shape ``(...)``).
        Profiles that are entire functions may also accept complex input,
        which the contour-shifted tail evaluation in
        :mod:`sdwave.observability` relies on.
    name
        Label echoed in experiment outputs.
    decay_radius
        Radius at which the profile must have decayed below ``decay_tol``
        relative to ``|phi_hat(0)|``; also the quadrature half-width.
    """

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    decay_radius: float = 12.0
    decay_tol: float = field(default=1e-20, compare=False)

    def __call__(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta)
        if not np.iscomplexobj(zeta):
            zeta = zeta.astype(float)
        return self.func(zeta)

    def check_decay(self, d: int) -> float:
        """Largest relative magnitude on the sphere of radius ``decay_radius``.

        Raises ``ValueError`` when it exceeds ``decay_tol``.
        """
        pts = _sphere_points(d, self.decay_radius)
        peak = abs(complex(self(np.zeros(d))))
        worst = float(np.max(np.abs(self(pts)))) / peak
        if worst > self.decay_tol:
            raise ValueError(
                f"profile {self.name!r} has not decayed at |zeta|={self.decay_radius}: {worst:.3g}"
            )
        return worst

    def moment(self, d: int, k: int) -> float:
        """Squared weighted norm ``|| |.|^k phi_hat ||_{L^2(R^d)}^2``."""
        return _moment(self, d, k)

    def moment_ratio(self, d: int, k: int = 3) -> float:
        return self.moment(d, k) / self.moment(d, 0)


def _sphere_points(d: int, radius: float) -> np.ndarray:
    if d == 1:
        return np.array([[radius], [-radius]])
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((512, d))
    pts = np.concatenate([pts, np.eye(d), -np.eye(d), np.ones((1, d)), -np.ones((1, d))])
    return radius * pts / np.linalg.norm(pts, axis=1, keepdims=True)


@lru_cache(maxsize=64)
def _moment(profile: Profile, d: int, k: int, rtol: float = 1e-10) -> float:
    # trapezoid on [-R, R]^d; spectrally accurate for Schwartz integrands
    R = profile.decay_radius
    n = 64
    max_points = 2**24
    prev = None
    while n**d <= max_points:
        ax = np.linspace(-R, R, n + 1)
        w = np.full(n + 1, ax[1] - ax[0])
        w[0] = w[-1] = 0.5 * w[0]
        grids = np.meshgrid(*([ax] * d), indexing="ij", sparse=True)
        zeta = np.stack(np.broadcast_arrays(*grids), axis=-1)
        vals = np.abs(profile(zeta)) ** 2 * np.sum(zeta * zeta, axis=-1) ** k
        weights = w
        for _ in range(d - 1):
            weights = np.multiply.outer(weights, w)
        cur = float(np.sum(vals * weights))
        if prev is not None and abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
        n *= 2
    raise QuadratureNotConverged(f"moment k={k} of profile {profile.name!r} did not converge")


GAUSSIAN = Profile(_unit_gaussian, name="gaussian")


def profile_by_name(name: str) -> Profile:
    if name == "gaussian":
        return GAUSSIAN
    raise KeyError(f"unknown profile {name!r}")


__all__ = ["Profile", "GAUSSIAN", "profile_by_name"]
