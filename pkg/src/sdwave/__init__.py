"""Wave packets for the finite-difference semi-discrete wave equation.

Submodules: dispersion, profiles, lattice, packets, evolution, decomposition,
asymptotics, observability, cli.
"""

from .dispersion import group_velocity, omega_semidiscrete, ray_position, taylor_split
from .lattice import LatticeField, PeriodicLattice, SpectralField, sdft_forward, sdft_inverse
from .packets import PacketSpec
from .profiles import GAUSSIAN, Profile

__version__ = "0.1.0"

__all__ = [
    "GAUSSIAN",
    "LatticeField",
    "PacketSpec",
    "PeriodicLattice",
    "Profile",
    "SpectralField",
    "group_velocity",
    "omega_semidiscrete",
    "ray_position",
    "sdft_forward",
    "sdft_inverse",
    "taylor_split",
]
