"""
cylscat: classical and semiclassical scattering on surfaces with two
cylindrical ends.

Modules
-------
geometry     profiles, potentials, section convention, open channels
classical    Hamilton flow and the scattering map kappa
channels     per-mode stationary scattering and the block S-matrix
propagator   S from cut-off time evolution (independent route)
phasespace   coherent states, Husimi densities, transport of wave packets
spectral     eigenphases, trace functionals, Weyl counts, equidistribution
resolvent    weighted 1D resolvent norms with a complex absorbing layer
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import (  # noqa: F401
    ModelSpec, PotentialSpec, PotentialTerm, ProfileFunction, bulge, cylinder, eta_c, hourglass, open_channels,
)
