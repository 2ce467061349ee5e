"""Fundamental physical constants (CODATA 2018, SI units).

These are fixed values used throughout the model equations. They are not
user-configurable; device-specific quantities live in
:class:`fecapsim.params.DeviceParams`.
"""

from dataclasses import dataclass

# Boltzmann constant (J/K)
K_B = 1.380649e-23
# Planck constant (J*s)
H_PLANCK = 6.62607015e-34
# Elementary charge (C)
Q_E = 1.602176634e-19
# Vacuum permittivity (F/m)
EPS_0 = 8.8541878128e-12
# Electron rest mass (kg)
M_0 = 9.1093837015e-31


@dataclass(frozen=True)
class PhysicalConstants:
    """Frozen bundle of the constants entering the model equations."""

    k_B: float = K_B
    h: float = H_PLANCK
    q: float = Q_E
    eps0: float = EPS_0
    m0: float = M_0


CONSTANTS = PhysicalConstants()
