"""Physical constants (CODATA 2018), SI units.

Pinned explicitly rather than taken from ``scipy.constants`` so results do not
drift when scipy moves to a newer CODATA release.
"""

from dataclasses import dataclass
import math


@dataclass(frozen=True)
class PhysicalConstants:
    e: float = 1.602176634e-19  # C
    m_e: float = 9.1093837015e-31  # kg
    eps0: float = 8.8541878128e-12  # F/m
    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23  # J/K

    @property
    def coulomb_k(self) -> float:
        """e^2 / (4 pi eps0) in J m."""
        return self.e**2 / (4.0 * math.pi * self.eps0)


CONST = PhysicalConstants()

E_CHARGE = CONST.e
M_E = CONST.m_e
EPS0 = CONST.eps0
HBAR = CONST.hbar
K_B = CONST.k_B
COULOMB_K = CONST.coulomb_k

GAMMA_MIN = (2.0 / math.pi) ** 2
GAMMA_MAX = 1.0
