"""Film inductance and geometric scaling of meandered kinetic-inductance resonators."""

from dataclasses import dataclass, field
import math

import numpy as np

from .constants import HBAR, K_B
from .errors import InvalidParameterError

BCS_RATIO = 1.76


def _positive(**kw):
    for k, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise InvalidParameterError(f"{k} must be positive, got {v!r}")


def sheet_inductance(r_sq, t_c):
    """Kinetic sheet inductance ``hbar R_sq / (1.76 pi k_B T_c)`` in H per square."""
    _positive(r_sq=r_sq, t_c=t_c)
    return HBAR * r_sq / (BCS_RATIO * math.pi * K_B * t_c)


@dataclass(frozen=True)
class FilmProperties:
    r_sq: float  # ohm per square, normal state
    t_c: float  # K
    l_sq_uncertainty: float | None = None  # H per square, metadata only
    l_sq: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "l_sq", sheet_inductance(self.r_sq, self.t_c))


def wire_inductance(l_sq, length, width):
    """Kinetic inductance of a wire of ``length / width`` squares (geometric part ignored)."""
    _positive(l_sq=l_sq, length=length, width=width)
    return l_sq * length / width


@dataclass(frozen=True)
class ScalingResult:
    f0: float
    z: float
    f0_ratio: float
    z_ratio: float
    z_ratio_product: float  # (l'/l) (w/w') (f0'/f0), the same ratio by the other route


def scaling_predict(length, width, f0, z, target_length, target_width):
    """Predict frequency and impedance of a resized meander.

    Uses ``f0 ~ (w / l^3)^(1/4)`` and ``Z ~ (l / w^3)^(1/4)``.
    """
    _positive(length=length, width=width, f0=f0, z=z, target_length=target_length, target_width=target_width)
    rl = target_length / length
    rw = target_width / width
    f_ratio = (rw / rl**3) ** 0.25
    z_ratio = (rl / rw**3) ** 0.25
    return ScalingResult(
        f0=f0 * f_ratio,
        z=z * z_ratio,
        f0_ratio=f_ratio,
        z_ratio=z_ratio,
        z_ratio_product=rl / rw * f_ratio,
    )


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float  # RMS of log residuals


def fit_power_law(x, y):
    """Unweighted least-squares fit of ``log y = exponent log x + log prefactor``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameterError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise InvalidParameterError("power-law fit needs at least three points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidParameterError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    a = np.column_stack([lx, np.ones_like(lx)])
    (slope, icept), *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - (slope * lx + icept)
    return PowerLawFit(float(slope), float(np.exp(icept)), float(np.sqrt(np.mean(resid**2))))
