"""Two-node lumped model of a symmetrically coupled resonator (SCR).

Each half of the resonator is an inductor ``L`` to a shared tail node, which
connects to ground through the tail inductance ``L_t``. The tail node is
eliminated with a star-to-delta transform so the circuit reduces to two
nodes ``a`` and ``b`` with capacitance matrix ``Cmat`` and inverse-inductance
matrix ``Linv``. All quantities are SI.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
import scipy.linalg

from .constants import GAMMA_MAX, GAMMA_MIN
from .errors import InvalidParameterError, UnstableCircuitError

COMMON = "common"
DIFFERENTIAL = "differential"
ELECTRON = "electron-like"

_EIG_TOL = 1e-9


@dataclass(frozen=True)
class CircuitDesign:
    """Geometric and lumped parameters of one SCR (SI units).

    ``length`` is the meander length of one half, ``L`` the inductance of one
    half. ``C_x`` is the total cross capacitance between the two halves and
    ``C_ca``/``C_cb`` the coupling capacitances to the feedline.
    """

    name: str
    length: float
    width: float
    C_a: float
    C_b: float
    C_x: float
    C_ca: float
    C_cb: float
    L: float
    L_t: float = 0.0

    def __post_init__(self):
        for key in ("length", "width", "C_a", "C_b", "L"):
            v = getattr(self, key)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{self.name}: {key} must be positive, got {v!r}")
        for key in ("C_x", "C_ca", "C_cb", "L_t"):
            v = getattr(self, key)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{self.name}: {key} must be non-negative, got {v!r}")

    def symmetrized(self):
        """Copy with both halves set to the mean of the two (capacitances and feedline coupling)."""
        c = 0.5 * (self.C_a + self.C_b)
        cc = 0.5 * (self.C_ca + self.C_cb)
        return replace(self, C_a=c, C_b=c, C_ca=cc, C_cb=cc)


@dataclass(frozen=True)
class TwoNodeMatrices:
    Cmat: np.ndarray
    Linv: np.ndarray
    L: float = float("nan")  # inductance of one half, carried for impedance
    L_t: float = 0.0

    @property
    def det(self):
        c = self.Cmat
        return c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]


@dataclass
class Mode:
    """One normal mode.

    ``eigenvector`` is given in impedance-weighted coordinates: each entry is
    the coordinate (node charge, or electron displacement) multiplied by the
    square root of its inertia, so circuit and electron entries are
    commensurate. For a symmetric circuit this reduces to the familiar
    (1, 1)/sqrt(2) and (1, -1)/sqrt(2) vectors.
    """

    frequency: float
    eigenvector: np.ndarray
    label: str
    impedance: float | None = None
    extras: dict = field(default_factory=dict)


def ydelta_transform(L_a, L_b, L_t):
    """Star-to-delta transform of the inductive tail.

    Returns ``(L_1, L_2, L_3)`` for the branches a-ground, b-ground and a-b.
    With ``L_t == 0`` the a-b branch is open and ``L_3`` is ``inf``.
    """
    if not (L_a > 0 and L_b > 0):
        raise InvalidParameterError(f"L_a and L_b must be positive, got {L_a!r}, {L_b!r}")
    if not L_t >= 0:
        raise InvalidParameterError(f"L_t must be non-negative, got {L_t!r}")
    p = L_a * L_b + L_a * L_t + L_b * L_t
    L_1 = p / L_b
    L_2 = p / L_a
    L_3 = p / L_t if L_t > 0 else math.inf
    return L_1, L_2, L_3


def inverse_inductance_matrix(L_a, L_b, L_t):
    L_1, L_2, L_3 = ydelta_transform(L_a, L_b, L_t)
    # 1/L_3 written via L_t so that L_t = 0 gives an exact zero
    inv3 = L_t / (L_a * L_b + L_a * L_t + L_b * L_t)
    return np.array([[1.0 / L_1 + inv3, -inv3], [-inv3, 1.0 / L_2 + inv3]])


def _check_gamma(gamma):
    if not (GAMMA_MIN - 1e-12 <= gamma <= GAMMA_MAX + 1e-12):
        raise InvalidParameterError(f"gamma must lie in [(2/pi)^2, 1], got {gamma!r}")


def build_matrices(design, include_feedline=True, gamma=1.0, discount_feedline=True):
    """Capacitance and inverse-inductance matrices of the reduced two-node circuit.

    Feedline capacitances are folded into the ground capacitances when
    ``include_feedline`` is set. ``gamma`` scales every capacitance; with
    ``discount_feedline=False`` the folded feedline terms are left unscaled.
    """
    _check_gamma(gamma)
    ca, cb, cx = gamma * design.C_a, gamma * design.C_b, gamma * design.C_x
    if include_feedline:
        s = gamma if discount_feedline else 1.0
        ca += s * design.C_ca
        cb += s * design.C_cb
    cmat = np.array([[ca + cx, -cx], [-cx, cb + cx]])
    linv = inverse_inductance_matrix(design.L, design.L, design.L_t)
    return TwoNodeMatrices(cmat, linv, L=design.L, L_t=design.L_t)


def fix_sign(v):
    """Flip ``v`` so its first entry that is not negligible is positive."""
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v)) if v.size else 0.0
    for x in v:
        if abs(x) > 1e-12 * scale:
            return v if x > 0 else -v
    return v


def classify_mode(eigenvector, n_circuit=2):
    """Label a mode ``common``, ``differential`` or ``electron-like``.

    Only the first two (circuit) entries enter the common/differential
    projection. Vectors with further entries are electron-like when less than
    half of their squared norm sits on the circuit entries.
    """
    v = np.asarray(eigenvector, dtype=float)
    if v.shape[0] < 2:
        raise InvalidParameterError("eigenvector needs at least two circuit entries")
    total = float(v @ v)
    if total == 0.0:
        raise InvalidParameterError("cannot classify a zero vector")
    circ = v[:n_circuit]
    if v.shape[0] > n_circuit and float(circ @ circ) < 0.5 * total:
        return ELECTRON
    pc = abs(circ[0] + circ[1])
    pd = abs(circ[0] - circ[1])
    return COMMON if pc >= pd else DIFFERENTIAL


def _weighted(q, inertia_inv):
    w = q / np.sqrt(inertia_inv)
    return fix_sign(w / np.linalg.norm(w))


def eigenmodes(mats):
    """Normal modes of the two-node circuit, sorted by frequency.

    Solves ``Linv u = w^2 Cmat u`` as a symmetric-definite problem, so the
    spectrum is real. Node charges are ``q = Cmat u``.
    """
    cmat = np.asarray(mats.Cmat, dtype=float)
    linv = np.asarray(mats.Linv, dtype=float)
    try:
        w2, u = scipy.linalg.eigh(linv, cmat)
    except np.linalg.LinAlgError as exc:
        raise UnstableCircuitError(f"capacitance matrix is not positive definite: {exc}") from exc
    scale = max(np.max(np.abs(w2)), np.finfo(float).tiny)
    if np.any(w2 < -_EIG_TOL * scale):
        raise UnstableCircuitError(f"negative eigenvalue in circuit spectrum: {w2}")
    w2 = np.clip(w2, 0.0, None)
    modes = []
    for k in np.argsort(w2):
        q = cmat @ u[:, k]
        vec = _weighted(q, np.diag(linv))
        freq = math.sqrt(w2[k]) / (2 * math.pi)
        if not freq > 0:
            raise UnstableCircuitError("zero-frequency mode in circuit spectrum")
        label = classify_mode(vec)
        mode = Mode(freq, vec, label)
        if label == DIFFERENTIAL and math.isfinite(mats.L):
            mode.impedance = mats.L * 2 * math.pi * freq
        elif label == COMMON and math.isfinite(mats.L):
            mode.impedance = (mats.L + 2 * mats.L_t) * 2 * math.pi * freq
        modes.append(mode)
    return modes


def symmetric_frequencies(L, C, L_t=0.0, C_x=0.0):
    """Closed-form (common, differential) frequencies of a fully symmetric SCR."""
    if not (L > 0 and C > 0):
        raise InvalidParameterError("L and C must be positive")
    if L_t < 0 or C_x < 0:
        raise InvalidParameterError("L_t and C_x must be non-negative")
    f_c = 1.0 / (2 * math.pi * math.sqrt((L + 2 * L_t) * C))
    f_d = 1.0 / (2 * math.pi * math.sqrt(L * (C + 2 * C_x)))
    return f_c, f_d


def modes_by_label(modes):
    """Map label -> mode for a two-mode circuit result.

    Strongly asymmetric circuits can give two modes with the same projection
    label; the tie is broken by giving the other label to the mode with the
    weaker claim on it.
    """
    if len(modes) != 2:
        raise InvalidParameterError("expected exactly two circuit modes")
    a, b = modes
    if a.label != b.label:
        return {a.label: a, b.label: b}
    da = abs(a.eigenvector[0] - a.eigenvector[1])
    db = abs(b.eigenvector[0] - b.eigenvector[1])
    diff, com = (a, b) if da > db else (b, a)
    diff.label, com.label = DIFFERENTIAL, COMMON
    return {DIFFERENTIAL: diff, COMMON: com}


def mode_splitting(design, gamma=1.0, include_feedline=True, discount_feedline=True):
    """Common minus differential frequency: ``(exact, approximate)`` in Hz.

    The approximation is the small-coupling expansion
    ``(1 / 2 pi sqrt(L C)) (C_x / C - L_t / L)`` with ``C`` the mean of the
    (feedline-folded, discounted) ground capacitances of the two halves.
    """
    mats = build_matrices(design, include_feedline, gamma, discount_feedline)
    by = modes_by_label(eigenmodes(mats))
    exact = by[COMMON].frequency - by[DIFFERENTIAL].frequency
    cx = mats.Cmat[0, 1] * -1.0
    c = 0.5 * (mats.Cmat[0, 0] + mats.Cmat[1, 1]) - cx
    L = design.L
    approx = (cx / c - design.L_t / L) / (2 * math.pi * math.sqrt(L * c))
    return exact, approx


def differential_impedance(design, f_d, gamma=1.0, include_feedline=True, discount_feedline=True):
    """``(L * 2 pi f_d, sqrt(L / (C + 2 C_x)))`` in ohms.

    The closed form uses the mean discounted ground capacitance, so the two
    agree exactly only for a symmetric circuit.
    """
    if not f_d > 0:
        raise InvalidParameterError("f_d must be positive")
    mats = build_matrices(design, include_feedline, gamma, discount_feedline)
    cx = -mats.Cmat[0, 1]
    c = 0.5 * (mats.Cmat[0, 0] + mats.Cmat[1, 1]) - cx
    z_dyn = design.L * 2 * math.pi * f_d
    z_closed = math.sqrt(design.L / (c + 2 * cx))
    return z_dyn, z_closed
