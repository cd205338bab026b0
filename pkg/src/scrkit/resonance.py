"""Hanger-geometry transmission: model, synthesis, fitting and derived quantities.

Near a resonance the normalized transmission of a side-coupled resonator is

    S21 = 1 / (1 + (Qi / Qc) e^{i phi} / (1 + 2 i Qi (f - f0) / f0))

which traces a circle through 1 in the inverse plane ``1 / S21``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math

import numpy as np
import scipy.optimize

from . import _kernels
from .circuit import COMMON, DIFFERENTIAL
from .constants import HBAR
from .errors import ConvergenceError, InvalidParameterError, NoResonanceError, ValidationError

MIN_SAMPLES = 32
UNCOUPLED = math.inf


@dataclass(frozen=True)
class S21Trace:
    frequencies: np.ndarray
    values: np.ndarray
    power_in: float | None = None  # W at the device

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        s = np.asarray(self.values, dtype=complex)
        if f.ndim != 1 or f.shape != s.shape:
            raise ValidationError("frequencies and values must be 1-D arrays of equal length")
        if f.size < MIN_SAMPLES:
            raise ValidationError(f"trace needs at least {MIN_SAMPLES} samples, got {f.size}")
        bad = np.nonzero(np.diff(f) <= 0)[0]
        if bad.size:
            raise ValidationError(f"frequencies must be strictly increasing (sample {bad[0] + 1})")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", s)


@dataclass(frozen=True)
class ResonanceFit:
    f0: float
    qi: float
    qc: float
    phi: float = 0.0
    residual_rms: float = 0.0
    uncertainties: dict = field(default_factory=dict)
    delay: float = 0.0  # s, only when the cable-delay term was fitted

    def __post_init__(self):
        if not (self.f0 > 0 and self.qi > 0 and self.qc > 0):
            raise InvalidParameterError("f0, qi and qc must be positive")
        # wrap into (-pi, pi]
        phi = math.remainder(self.phi, 2 * math.pi)
        if phi == -math.pi:
            phi = math.pi
        object.__setattr__(self, "phi", phi)

    @property
    def q_loaded(self):
        return self.qi * self.qc / (self.qi + self.qc)

    def as_dict(self):
        return {
            "f0_hz": self.f0,
            "qi": self.qi,
            "qc": self.qc,
            "phi_rad": self.phi,
            "delay_s": self.delay,
            "residual_rms": self.residual_rms,
            "uncertainties": dict(self.uncertainties),
        }


def s21_model(f, params):
    """Evaluate the hanger model at frequencies ``f`` (scalar or array)."""
    scalar = np.ndim(f) == 0
    fa = np.atleast_1d(np.asarray(f, dtype=float))
    s, _ = _kernels.s21_eval(fa, params.f0, params.qi, params.qc, params.phi)
    if params.delay:
        s = s * np.exp(2j * math.pi * (fa - params.f0) * params.delay)
    return s[0] if scalar else s


def synth_trace(params, span, n_points, noise_rms=0.0, seed=0):
    """Evenly spaced model samples centred on ``params.f0`` plus complex Gaussian noise.

    ``noise_rms`` is the RMS of the complex noise (each quadrature carries
    ``noise_rms / sqrt(2)``).
    """
    if not span > 0:
        raise InvalidParameterError("span must be positive")
    if n_points < MIN_SAMPLES:
        raise InvalidParameterError(f"n_points must be at least {MIN_SAMPLES}")
    f = np.linspace(params.f0 - 0.5 * span, params.f0 + 0.5 * span, int(n_points))
    s = s21_model(f, params)
    if noise_rms > 0:
        rng = np.random.default_rng(seed)
        s = s + noise_rms / math.sqrt(2) * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return S21Trace(f, s)


def _outer(n, fraction):
    k = max(1, int(round(0.5 * fraction * n)))
    return np.r_[0:k, n - k : n]


def baseline(trace, fraction=0.1):
    """Complex baseline from the outer ``fraction`` of samples.

    Magnitude and phase are medians taken separately, with phases measured
    relative to the first outer sample, so scaling a trace by any complex
    constant scales the baseline by the same constant.
    """
    z = trace.values[_outer(trace.values.size, fraction)]
    ref = z[0]
    mag = np.median(np.abs(z))
    ph = np.angle(ref) + np.median(np.angle(z / ref))
    return mag * np.exp(1j * ph)


def normalize_baseline(trace, fraction=0.1):
    return replace(trace, values=trace.values / baseline(trace, fraction))


def _circle_center(z):
    # algebraic (Kasa) fit: x^2 + y^2 = a x + b y + c
    x, y = z.real, z.imag
    a = np.column_stack([x, y, np.ones_like(x)])
    (p, q, _), *_ = np.linalg.lstsq(a, x * x + y * y, rcond=None)
    return 0.5 * p + 0.5j * q


def initial_guess(trace):
    """Starting point for :func:`fit_resonance` from the dip shape.

    f0 at the transmission minimum, loaded Q from the full width at half dip
    depth, phi from the centre of the resonance circle in the inverse plane,
    and the Qi/Qc split from the dip depth.
    """
    f, s = trace.frequencies, trace.values
    mag = np.abs(s)
    base = np.median(mag[_outer(mag.size, 0.1)])
    k = int(np.argmin(mag))
    if mag[k] > 0.99 * base:
        raise NoResonanceError("no resonance dip found")
    f0 = f[k]
    absorb = 1.0 - (mag / base) ** 2
    half = 0.5 * absorb[k]
    lo = k
    while lo > 0 and absorb[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < mag.size - 1 and absorb[hi + 1] >= half:
        hi += 1

    def edge(i_in, i_out):
        if i_out < 0 or i_out >= mag.size:
            return f[i_in]
        a0, a1 = absorb[i_in], absorb[i_out]
        t = (a0 - half) / (a0 - a1) if a0 != a1 else 0.0
        return f[i_in] + t * (f[i_out] - f[i_in])

    width = edge(hi, hi + 1) - edge(lo, lo - 1)
    if not width > 0:
        width = f[1] - f[0]
    ql = f0 / width

    # inverse-plane circle from the samples within a few linewidths
    near = np.abs(f - f0) < 3.0 * width
    if np.count_nonzero(near) < 8:
        near = slice(None)
    centre = _circle_center(base / s[near])
    phi = float(np.angle(centre - 1.0))
    smin = mag[k] / base
    cp = math.cos(phi)
    disc = cp * cp - 1.0 + 1.0 / (smin * smin)
    r = -cp + math.sqrt(max(disc, 0.0))
    if not r > 0:
        r = 2.0 * abs(centre - 1.0)
    qi = ql * (1.0 + r)
    qc = qi / r
    return ResonanceFit(f0=float(f0), qi=float(qi), qc=float(qc), phi=phi)


def fit_resonance(trace, init=None, fit_delay=False, max_nfev=200):
    """Least-squares fit of the hanger model to a complex trace.

    Residuals are the stacked real and imaginary parts. Internally the fit
    runs in (f0 offset in linewidths, ln Qi, ln Qc, phi[, delay]) with an
    analytic Jacobian. Standard errors come from the linearized covariance at
    the optimum. The trace is used as given; call :func:`normalize_baseline`
    first for measured data with an arbitrary baseline.
    """
    if init is None:
        init = initial_guess(trace)
    f = trace.frequencies
    y = trace.values
    f_ref = init.f0
    q_ref = init.q_loaded
    span = f[-1] - f[0]
    to_f0 = f_ref / q_ref

    def unpack(p):
        f0 = f_ref + to_f0 * p[0]
        return f0, math.exp(p[1]), math.exp(p[2]), p[3], (p[4] / (2 * math.pi * span) if fit_delay else 0.0)

    def model(p):
        f0, qi, qc, phi, tau = unpack(p)
        s, jac = _kernels.s21_eval(f, f0, qi, qc, phi)
        j = np.empty((f.size, p.size), dtype=complex)
        j[:, 0] = jac[:, 0] * to_f0
        j[:, 1] = jac[:, 1] * qi
        j[:, 2] = jac[:, 2] * qc
        j[:, 3] = jac[:, 3]
        if fit_delay:
            rot = np.exp(2j * math.pi * (f - f0) * tau)
            s = s * rot
            j[:, :4] *= rot[:, None]
            j[:, 0] -= 2j * math.pi * tau * to_f0 * s
            j[:, 4] = 1j * (f - f0) / span * s
        return s, j

    def resid(p):
        s, _ = model(p)
        d = s - y
        return np.concatenate([d.real, d.imag])

    def jac(p):
        _, j = model(p)
        return np.vstack([j.real, j.imag])

    p0 = [0.0, math.log(init.qi), math.log(init.qc), init.phi]
    if fit_delay:
        p0.append(2 * math.pi * span * init.delay)
    p0 = np.array(p0)
    res = scipy.optimize.least_squares(
        resid, p0, jac=jac, method="trf", xtol=1e-10, ftol=1e-12, gtol=1e-15, max_nfev=max_nfev
    )
    f0, qi, qc, phi, tau = unpack(res.x)
    n = f.size
    dof = max(2 * n - res.x.size, 1)
    ssr = float(res.fun @ res.fun)
    rms = math.sqrt(ssr / n)  # RMS of |S - y| over complex samples
    unc = {}
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * ssr / dof
        sd = np.sqrt(np.clip(np.diag(cov), 0, None))
        unc = {"f0": to_f0 * sd[0], "qi": qi * sd[1], "qc": qc * sd[2], "phi": sd[3]}
        if fit_delay:
            unc["delay"] = sd[4] / (2 * math.pi * span)
    except np.linalg.LinAlgError:
        pass
    try:
        fit = ResonanceFit(f0=f0, qi=qi, qc=qc, phi=phi, residual_rms=rms, uncertainties=unc, delay=tau)
    except InvalidParameterError as exc:
        raise ConvergenceError(f"fit left the valid parameter region: {exc}") from exc
    if res.status <= 0 or not (f[0] <= f0 <= f[-1]):
        raise ConvergenceError(f"resonance fit did not converge: {res.message}", best=fit)
    return fit


def fit_many(traces, workers=None, **kwargs):
    """Fit independent traces, optionally on a thread pool; order is preserved."""
    if workers is None or workers <= 1:
        return [fit_resonance(t, **kwargs) for t in traces]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda t: fit_resonance(t, **kwargs), traces))


def coupling_capacitance(c_ca, c_cb, mode):
    if mode == COMMON:
        return 0.5 * (c_ca + c_cb)
    if mode == DIFFERENTIAL:
        return 0.5 * (c_ca - c_cb)
    raise InvalidParameterError(f"mode must be {COMMON!r} or {DIFFERENTIAL!r}, got {mode!r}")


def qc_from_circuit(z_res, z0, c_ca, c_cb, mode, f0):
    """Coupling quality factor ``1 / (Z_res Z0 C_c^2 w0^2)``.

    Returns ``UNCOUPLED`` (infinity) when the effective coupling capacitance
    vanishes, e.g. the differential mode of a symmetrically coupled resonator.
    """
    if not (z_res > 0 and z0 > 0 and f0 > 0) or c_ca < 0 or c_cb < 0:
        raise InvalidParameterError("impedances and f0 must be positive, capacitances non-negative")
    cc = coupling_capacitance(c_ca, c_cb, mode)
    if cc == 0:
        return UNCOUPLED
    w0 = 2 * math.pi * f0
    return 1.0 / (z_res * z0 * cc * cc * w0 * w0)


def photon_number(p_in, fit):
    """Mean intra-cavity photon number for power ``p_in`` (W) at the device."""
    if not p_in > 0:
        raise InvalidParameterError("p_in must be positive")
    w0 = 2 * math.pi * fit.f0
    return p_in * fit.qc / (HBAR * w0 * w0) * (fit.qi / (fit.qi + fit.qc)) ** 2


def dbm_to_watts(p_dbm):
    return 1e-3 * 10.0 ** (p_dbm / 10.0)
