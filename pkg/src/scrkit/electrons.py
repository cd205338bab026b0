"""Electrons trapped in the dot of an SCR and their coupling to both plates.

Small oscillations of ``n`` electrons about their equilibrium positions are
coupled to the node charges ``q_a, q_b`` of the two-node circuit. The joint
normal modes follow from ``w^2 q = Linv_t Cinv_t q`` where ``Linv_t`` holds
the circuit inverse inductances and ``1/m_e`` per electron coordinate, and
``Cinv_t`` holds the inverse capacitance block, the electron stiffness block
and the plate couplings ``-e beta``.

Coordinates are ordered ``(q_a, q_b, x_1, [y_1,] x_2, [y_2,] ...)``.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg
import scipy.optimize

from . import _kernels
from ._search import golden_section
from .circuit import (
    COMMON,
    DIFFERENTIAL,
    ELECTRON,
    Mode,
    build_matrices,
    classify_mode,
    eigenmodes,
    fix_sign,
    modes_by_label,
)
from .constants import COULOMB_K, E_CHARGE, EPS0, M_E
from .errors import (
    ConvergenceError,
    InvalidParameterError,
    NearResonanceError,
    SingularityError,
    UnstableCouplingError,
)

HARMONIC_1D = "harmonic1D"
QUADRATIC_2D = "quadratic2D"

GRAD_TOL = 1e-9
TRACK_OVERLAP_MIN = 0.8


@dataclass(frozen=True)
class DotPotential:
    """Electrostatic confinement of the dot.

    ``harmonic1D``: ``-e V = m_e omega_dot^2 x^2 / 2`` along x only.
    ``quadratic2D``: ``V = (v_xx x^2 + v_yy y^2) / 2 + v_xy x y`` in volts, so
    ``v_xx`` etc. are the second derivatives of ``V`` in V/m^2.
    """

    kind: str
    omega_dot: float = 0.0
    v_xx: float = 0.0
    v_yy: float = 0.0
    v_xy: float = 0.0

    def __post_init__(self):
        if self.kind == HARMONIC_1D:
            if not self.omega_dot > 0:
                raise InvalidParameterError("harmonic dot needs omega_dot > 0")
        elif self.kind == QUADRATIC_2D:
            if np.any(np.linalg.eigvalsh(self.stiffness()) <= 0):
                raise InvalidParameterError("quadratic potential is not confining")
        else:
            raise InvalidParameterError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def harmonic(cls, omega_dot):
        return cls(HARMONIC_1D, omega_dot=omega_dot)

    @classmethod
    def quadratic(cls, v_xx, v_yy, v_xy=0.0):
        return cls(QUADRATIC_2D, v_xx=v_xx, v_yy=v_yy, v_xy=v_xy)

    @property
    def dims(self):
        return 1 if self.kind == HARMONIC_1D else 2

    def stiffness(self):
        """Hessian of the confinement energy ``-e V`` (N/m), shape (dims, dims)."""
        if self.kind == HARMONIC_1D:
            return np.array([[M_E * self.omega_dot**2]])
        return -E_CHARGE * np.array([[self.v_xx, self.v_xy], [self.v_xy, self.v_yy]])


@dataclass(frozen=True)
class ElectronConfiguration:
    positions: np.ndarray  # (n, 2), metres; y = 0 for one-dimensional dots
    dims: int

    @property
    def n(self):
        return self.positions.shape[0]


@dataclass(frozen=True)
class LeverArms:
    """Spatial derivatives of the plate lever arms at each electron (1/m)."""

    da_dx: np.ndarray
    db_dx: np.ndarray
    da_dy: np.ndarray
    db_dy: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.da_dx, self.db_dx, self.da_dy, self.db_dy)]
        if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
            raise InvalidParameterError("lever-arm arrays must be 1-D and of equal length")
        if not all(np.all(np.isfinite(a)) for a in arrs):
            raise InvalidParameterError("lever arms must be finite")
        for name, a in zip(("da_dx", "db_dx", "da_dy", "db_dy"), arrs):
            object.__setattr__(self, name, a)

    @classmethod
    def antisymmetric(cls, n, field_x):
        """Centered-dot idealization: ``da/dx = -db/dx = field_x`` for every electron."""
        f = np.full(n, float(field_x))
        z = np.zeros(n)
        return cls(f, -f, z, z.copy())

    @property
    def n(self):
        return self.da_dx.shape[0]

    def scaled(self, s):
        return LeverArms(s * self.da_dx, s * self.db_dx, s * self.da_dy, s * self.db_dy)


@dataclass(frozen=True)
class CoulombCouplings:
    kplus: np.ndarray
    kminus: np.ndarray
    l: np.ndarray


@dataclass(frozen=True)
class Beta:
    xa: np.ndarray
    xb: np.ndarray
    ya: np.ndarray
    yb: np.ndarray


@dataclass(frozen=True)
class CoupledSystemMatrices:
    Linv_t: np.ndarray
    Cinv_t: np.ndarray
    n: int
    dims: int
    L: float = float("nan")


# ---------------------------------------------------------------------------
# equilibrium


def pair_separation(omega_dot):
    """Closed-form spacing of two electrons in a 1-D harmonic dot (m)."""
    return (E_CHARGE**2 / (2 * math.pi * EPS0 * M_E * omega_dot**2)) ** (1.0 / 3.0)


def _scales(potential):
    a = potential.stiffness()
    k0 = float(np.trace(a)) / a.shape[0]
    l0 = (COULOMB_K / k0) ** (1.0 / 3.0)
    return a / k0, k0, l0


def _energy_funcs(a_hat, n, d):
    def energy(x):
        pos = x.reshape(n, d)
        ec, gc = _kernels.coulomb_energy_grad(pos)
        return 0.5 * np.einsum("ia,ab,ib->", pos, a_hat, pos) + ec

    def grad(x):
        pos = x.reshape(n, d)
        _, gc = _kernels.coulomb_energy_grad(pos)
        return (pos @ a_hat + gc).ravel()

    def hess(x):
        pos = x.reshape(n, d)
        return _kernels.coulomb_hessian(pos) + np.kron(np.eye(n), a_hat)

    return energy, grad, hess


def _seeds(n, d, a_hat):
    spacing = 2.0 ** (1.0 / 3.0)
    rng = np.random.default_rng(0)
    seeds = []
    if d == 1:
        for s in (spacing, spacing * n ** (1.0 / 3.0)):
            seeds.append(((np.arange(n) - 0.5 * (n - 1)) * s)[:, None])
        return seeds
    w, v = np.linalg.eigh(a_hat)
    soft = v[:, 0]
    for s in (spacing, spacing * n ** (1.0 / 3.0)):
        line = (np.arange(n) - 0.5 * (n - 1))[:, None] * s * soft[None, :]
        seeds.append(line)
    radius = 0.5 * spacing * max(n, 2) ** (1.0 / 3.0) * max(1.0, n / (2 * math.pi) * 0.5)
    for n_center in (0, 1):
        m = n - n_center
        ang = 2 * math.pi * np.arange(m) / max(m, 1)
        ring = radius * np.column_stack([np.cos(ang), np.sin(ang)])
        if n_center:
            ring = np.vstack([np.zeros((1, 2)), ring])
        seeds.append(ring)
    # small deterministic kicks so symmetric seeds can leave saddle points
    return seeds + [s + 1e-3 * rng.standard_normal(s.shape) for s in seeds]


def _newton_polish(x, grad, hess, iters=20):
    for _ in range(iters):
        g = grad(x)
        if np.max(np.abs(g)) < 1e-13:
            break
        try:
            step = np.linalg.solve(hess(x), g)
        except np.linalg.LinAlgError:
            break
        x = x - step
    return x


def equilibrium_positions(n, potential):
    """Equilibrium configuration of ``n`` electrons in ``potential``.

    Closed forms for a single electron and for a pair in a 1-D harmonic dot;
    otherwise the total energy is minimized from a set of deterministic seeds
    and the lowest-energy stationary point is returned.
    """
    if n < 1:
        raise InvalidParameterError("need at least one electron")
    d = potential.dims
    if n == 1:
        return ElectronConfiguration(np.zeros((1, 2)), d)
    if potential.kind == HARMONIC_1D and n == 2:
        half = 0.5 * pair_separation(potential.omega_dot)
        return ElectronConfiguration(np.array([[-half, 0.0], [half, 0.0]]), 1)

    a_hat, k0, l0 = _scales(potential)
    energy, grad, hess = _energy_funcs(a_hat, n, d)
    best = None
    for seed in _seeds(n, d, a_hat):
        try:
            res = scipy.optimize.minimize(
                energy, seed.ravel(), jac=grad, hess=hess, method="trust-exact", options={"gtol": 1e-12, "maxiter": 500}
            )
        except (np.linalg.LinAlgError, ValueError):
            continue
        x = _newton_polish(res.x, grad, hess)
        if not np.all(np.isfinite(x)) or np.max(np.abs(grad(x))) >= GRAD_TOL:
            continue
        e = energy(x)
        if best is None or e < best[0] - 1e-12 * abs(e):
            best = (e, x)
    if best is None:
        raise ConvergenceError(f"equilibrium search failed for n={n}")
    pos = best[1].reshape(n, d) * l0
    if d == 1:
        pos = np.column_stack([np.sort(pos[:, 0]), np.zeros(n)])
    return ElectronConfiguration(pos, d)


def energy_gradient(config, potential):
    """Gradient of the total potential energy at ``config`` (N), shape (n, dims)."""
    d = config.dims
    pos = config.positions[:, :d]
    _, gc = _kernels.coulomb_energy_grad(pos)
    return pos @ potential.stiffness() + COULOMB_K * gc


def force_scale(potential):
    _, k0, l0 = _scales(potential)
    return k0 * l0


# ---------------------------------------------------------------------------
# couplings


def coulomb_coefficients(config):
    """Pair coupling matrices ``k+``, ``k-`` and ``l`` (N/m)."""
    pos = np.asarray(config.positions, dtype=float)
    if pos.shape[0] < 2:
        raise InvalidParameterError("Coulomb couplings need at least two electrons")
    diff = pos[:, None, :] - pos[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(r, np.inf)
    if np.min(r) <= 0:
        raise SingularityError("coincident electrons")
    kp, km, lm = _kernels.coulomb_coefficients(pos, COULOMB_K)
    return CoulombCouplings(kp, km, lm)


def beta_coefficients(mats, arms):
    """Charge-to-field coefficients ``beta = Cmat^-1 (d alpha)`` per electron."""
    c = mats.Cmat
    det = mats.det
    caa = c[1, 1] / det  # (C_b + C_x) / D
    cbb = c[0, 0] / det  # (C_a + C_x) / D
    cab = -c[0, 1] / det  # C_x / D
    return Beta(
        xa=caa * arms.da_dx + cab * arms.db_dx,
        xb=cbb * arms.db_dx + cab * arms.da_dx,
        ya=caa * arms.da_dy + cab * arms.db_dy,
        yb=cbb * arms.db_dy + cab * arms.da_dy,
    )


def electron_stiffness(potential, config, exact_hessian=False):
    """Stiffness block of the electrons (N/m), coordinates interleaved per electron.

    By default pair couplings enter with unit weight, the usual reduced form
    of the equations of motion (two electrons give the ``3/2, -1/2`` block).
    With ``exact_hessian`` the pair terms are doubled, which is the true
    second derivative of the Coulomb energy.
    """
    n, d = config.n, config.dims
    a = potential.stiffness()
    if a.shape[0] != d:
        raise InvalidParameterError("potential and configuration dimensionality differ")
    k = np.kron(np.eye(n), a)
    if n < 2:
        return k
    cc = coulomb_coefficients(config)
    w = 2.0 if exact_hessian else 1.0
    pair = [[cc.kplus]] if d == 1 else [[cc.kplus, cc.l], [cc.l, cc.kminus]]
    for ia in range(d):
        for ib in range(d):
            m = w * pair[ia][ib]
            block = -m + np.diag(m.sum(axis=1))
            k[ia::d, ib::d] += block
    return k


def coupled_matrices(design, gamma, potential, config, arms, include_feedline=True, exact_hessian=False):
    """Assemble ``Linv_t`` and ``Cinv_t`` for the circuit plus ``n`` electrons."""
    n, d = config.n, config.dims
    if arms.n != n:
        raise InvalidParameterError(f"lever arms given for {arms.n} electrons, configuration has {n}")
    if potential.dims != d:
        raise InvalidParameterError("potential and configuration dimensionality differ")
    mats = build_matrices(design, include_feedline, gamma)
    size = 2 + d * n
    linv = np.zeros((size, size))
    linv[:2, :2] = mats.Linv
    linv[2:, 2:] = np.eye(d * n) / M_E

    cinv = np.zeros((size, size))
    det = mats.det
    c = mats.Cmat
    cinv[:2, :2] = np.array([[c[1, 1], -c[0, 1]], [-c[1, 0], c[0, 0]]]) / det
    cinv[2:, 2:] = electron_stiffness(potential, config, exact_hessian)
    beta = beta_coefficients(mats, arms)
    cols = np.zeros((2, d * n))
    cols[0, 0::d] = -E_CHARGE * beta.xa
    cols[1, 0::d] = -E_CHARGE * beta.xb
    if d == 2:
        cols[0, 1::d] = -E_CHARGE * beta.ya
        cols[1, 1::d] = -E_CHARGE * beta.yb
    cinv[:2, 2:] = cols
    cinv[2:, :2] = cols.T
    return CoupledSystemMatrices(linv, cinv, n, d, L=design.L)


def coupled_eigenmodes(matrices):
    """Normal modes of the coupled system, sorted by frequency."""
    m = matrices.Linv_t
    try:
        r = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise InvalidParameterError("inverse-inductance/mass matrix is not positive definite") from exc
    s = r.T @ matrices.Cinv_t @ r
    s = 0.5 * (s + s.T)
    w2, v = scipy.linalg.eigh(s)
    scale = np.max(np.abs(w2))
    if np.any(w2 <= -1e-12 * scale) or np.any(w2 <= 0):
        raise UnstableCouplingError("coupled stiffness matrix lost positive definiteness")
    inertia_inv = np.diag(m)
    modes = []
    for k in np.argsort(w2):
        q = r @ v[:, k]
        w = q / np.sqrt(inertia_inv)
        w = fix_sign(w / np.linalg.norm(w))
        f = math.sqrt(w2[k]) / (2 * math.pi)
        label = classify_mode(w)
        mode = Mode(f, w, label)
        if label == DIFFERENTIAL and math.isfinite(matrices.L):
            mode.impedance = matrices.L * 2 * math.pi * f
        modes.append(mode)
    return modes


def coupling_strength_analytic(field_x, f0, z_res, f_e, scr_factor=True):
    """Electron-photon coupling ``g / 2 pi`` in Hz.

    ``g = e E_x w0 sqrt(Z / (m_e w_e)) / 2``, times sqrt(2) for the
    two-plate (SCR) geometry when ``scr_factor`` is set.
    """
    if not (field_x > 0 and f0 > 0 and z_res > 0 and f_e > 0):
        raise InvalidParameterError("all inputs must be positive")
    w0 = 2 * math.pi * f0
    we = 2 * math.pi * f_e
    g = 0.5 * E_CHARGE * field_x * w0 * math.sqrt(z_res / (M_E * we))
    if scr_factor:
        g *= math.sqrt(2.0)
    return g / (2 * math.pi)


# ---------------------------------------------------------------------------
# derived quantities


def _as_arms(arms, n):
    if isinstance(arms, LeverArms):
        return arms
    return LeverArms.antisymmetric(n, float(arms))


def _embed(circuit_vec, size):
    out = np.zeros(size)
    out[:2] = circuit_vec
    return out


def _common_weight(mode):
    v = mode.eigenvector
    return 0.5 * (v[0] + v[1]) ** 2


def bare_differential(design, gamma, include_feedline=True):
    mats = build_matrices(design, include_feedline, gamma)
    return modes_by_label(eigenmodes(mats))[DIFFERENTIAL]


def dispersive_shift(design, gamma, potential, n, arms, include_feedline=True, exact_hessian=False):
    """Shift of the differential mode caused by ``n`` electrons (Hz).

    The shifted mode is the coupled mode with the largest overlap with the
    bare differential mode; a weak best overlap means the electrons are too
    close to resonance for the shift to be defined.
    """
    arms = _as_arms(arms, n)
    bare = bare_differential(design, gamma, include_feedline)
    config = equilibrium_positions(n, potential)
    cm = coupled_matrices(design, gamma, potential, config, arms, include_feedline, exact_hessian)
    modes = coupled_eigenmodes(cm)
    ref = _embed(bare.eigenvector, cm.Linv_t.shape[0])
    overlaps = np.array([(m.eigenvector @ ref) ** 2 for m in modes])
    k = int(np.argmax(overlaps))
    if overlaps[k] < TRACK_OVERLAP_MIN:
        raise NearResonanceError(
            f"differential mode is hybridized with the electrons (best overlap {overlaps[k]:.3f})"
        )
    return modes[k].frequency - bare.frequency


def _hybrid_gap(design, gamma, arms, omega_dot, include_feedline):
    pot = DotPotential.harmonic(omega_dot)
    cm = coupled_matrices(design, gamma, pot, ElectronConfiguration(np.zeros((1, 2)), 1), arms, include_feedline)
    modes = coupled_eigenmodes(cm)
    common = max(range(len(modes)), key=lambda i: _common_weight(modes[i]))
    pair = [m.frequency for i, m in enumerate(modes) if i != common]
    return abs(pair[1] - pair[0])


def avoided_crossing_gap(design, gamma, arms, sweep, include_feedline=True, rtol=1e-6):
    """Minimum splitting between the differential mode and one electron.

    ``sweep`` is either an array of dot frequencies ``omega_dot`` (rad/s) or a
    tuple ``(omega_min, omega_max, points)``. Returns ``(gap_hz, omega_at_min)``.
    """
    arms = _as_arms(arms, 1)
    if isinstance(sweep, tuple) and len(sweep) == 3:
        omegas = np.linspace(sweep[0], sweep[1], int(sweep[2]))
    else:
        omegas = np.asarray(sweep, dtype=float)
    if omegas.size < 3:
        raise InvalidParameterError("sweep needs at least three points")
    w_d = 2 * math.pi * bare_differential(design, gamma, include_feedline).frequency
    if not (omegas.min() < w_d < omegas.max()):
        raise InvalidParameterError("sweep does not bracket the differential mode")
    gaps = np.array([_hybrid_gap(design, gamma, arms, w, include_feedline) for w in omegas])
    k = int(np.argmin(gaps))
    if k == 0 or k == omegas.size - 1:
        raise InvalidParameterError("gap minimum lies at the sweep boundary")
    lo, hi = omegas[k - 1], omegas[k + 1]
    w_min, gap = golden_section(
        lambda w: _hybrid_gap(design, gamma, arms, w, include_feedline), lo, hi, rtol * omegas[k]
    )
    return gap, w_min


def sweep_dot_frequency(design, gamma, arms, omegas, n=1, include_feedline=True, exact_hessian=False):
    """Coupled spectrum across a range of harmonic dot frequencies.

    Modes are tracked from point to point by maximum eigenvector overlap, so
    a mode keeps its column through avoided crossings. Returns a list of
    records ``{"omega_dot", "frequencies", "labels"}``.
    """
    arms = _as_arms(arms, n)
    records = []
    prev = None
    for w in np.asarray(omegas, dtype=float):
        pot = DotPotential.harmonic(w)
        config = equilibrium_positions(n, pot)
        modes = coupled_eigenmodes(coupled_matrices(design, gamma, pot, config, arms, include_feedline, exact_hessian))
        if prev is not None:
            ov = np.array([[(p @ m.eigenvector) ** 2 for m in modes] for p in prev])
            _, cols = scipy.optimize.linear_sum_assignment(-ov)
            modes = [modes[c] for c in cols]
        prev = [m.eigenvector for m in modes]
        records.append(
            {
                "omega_dot": float(w),
                "frequencies": [m.frequency for m in modes],
                "labels": [m.label for m in modes],
            }
        )
    return records


__all__ = [
    "COMMON",
    "DIFFERENTIAL",
    "ELECTRON",
    "Beta",
    "CoulombCouplings",
    "CoupledSystemMatrices",
    "DotPotential",
    "ElectronConfiguration",
    "LeverArms",
    "avoided_crossing_gap",
    "beta_coefficients",
    "coulomb_coefficients",
    "coupled_eigenmodes",
    "coupled_matrices",
    "coupling_strength_analytic",
    "dispersive_shift",
    "equilibrium_positions",
    "pair_separation",
    "sweep_dot_frequency",
]
