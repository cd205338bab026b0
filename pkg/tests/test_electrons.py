import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from conftest import rel
from scrkit.circuit import COMMON, DIFFERENTIAL, build_matrices, eigenmodes, modes_by_label
from scrkit.constants import COULOMB_K, E_CHARGE, M_E
from scrkit.electrons import (
    DotPotential,
    ElectronConfiguration,
    LeverArms,
    avoided_crossing_gap,
    bare_differential,
    beta_coefficients,
    coulomb_coefficients,
    coupled_eigenmodes,
    coupled_matrices,
    coupling_strength_analytic,
    dispersive_shift,
    electron_stiffness,
    energy_gradient,
    equilibrium_positions,
    force_scale,
    pair_separation,
    sweep_dot_frequency,
)
from scrkit.errors import InvalidParameterError, NearResonanceError, SingularityError, UnstableCouplingError

W = 2 * math.pi * 4e9
FIELD = 0.25e6


def harmonic():
    return DotPotential.harmonic(W)


def quad(anis=1.0, xy=0.0):
    k = M_E * W**2
    return DotPotential.quadratic(-k / E_CHARGE, -anis * k / E_CHARGE, -xy * k / E_CHARGE)


# -- potentials and equilibrium -------------------------------------------


def test_potential_validation():
    with pytest.raises(InvalidParameterError):
        DotPotential.harmonic(0.0)
    with pytest.raises(InvalidParameterError):
        DotPotential.quadratic(1.0, 1.0)  # anti-confining for an electron
    with pytest.raises(InvalidParameterError):
        DotPotential("cubic")


def test_single_electron_at_origin():
    c = equilibrium_positions(1, harmonic())
    np.testing.assert_array_equal(c.positions, np.zeros((1, 2)))


def test_pair_spacing_closed_form():
    c = equilibrium_positions(2, harmonic())
    d = c.positions[1, 0] - c.positions[0, 0]
    assert rel(abs(d), pair_separation(W)) < 1e-10


def test_pair_spacing_from_minimizer():
    # the 2-D solver with a stiff y direction must reproduce the 1-D closed form
    c = equilibrium_positions(2, quad(anis=50.0))
    d = np.linalg.norm(c.positions[1] - c.positions[0])
    assert rel(d, pair_separation(W)) < 1e-10


@pytest.mark.parametrize("n", [3, 4, 5, 7])
@pytest.mark.parametrize("pot", [harmonic, quad], ids=["1d", "2d"])
def test_equilibrium_is_stationary(n, pot):
    p = pot()
    c = equilibrium_positions(n, p)
    g = energy_gradient(c, p)
    assert np.max(np.abs(g)) < 1e-9 * force_scale(p)
    np.testing.assert_allclose(c.positions.mean(axis=0), 0.0, atol=1e-9 * pair_separation(W))


def test_equilibrium_is_minimum():
    p = quad(anis=1.3)
    c = equilibrium_positions(5, p)
    k = electron_stiffness(p, c, exact_hessian=True)
    assert np.all(np.linalg.eigvalsh(k) > -1e-9 * np.abs(k).max())


def test_three_electrons_symmetric_line():
    c = equilibrium_positions(3, harmonic())
    x = np.sort(c.positions[:, 0])
    assert x[1] == pytest.approx(0.0, abs=1e-12 * pair_separation(W))
    # force balance on the outer electron: m w^2 x = K (1/x^2 + 1/(2x)^2)
    expect = (1.25 * COULOMB_K / (M_E * W**2)) ** (1 / 3)
    assert rel(x[2], expect) < 1e-10


# -- Coulomb couplings ------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.1e-6, 10e-6))
def test_coulomb_identity(theta, r):
    pos = np.array([[0.0, 0.0], [r * math.cos(theta), r * math.sin(theta)]])
    cc = coulomb_coefficients(ElectronConfiguration(pos, 2))
    lhs = ((cc.kplus[0, 1] - cc.kminus[0, 1]) / 2) ** 2 + cc.l[0, 1] ** 2
    rhs = (0.75 * COULOMB_K / r**3) ** 2
    assert rel(lhs, rhs) < 1e-10


def test_coulomb_coincident():
    with pytest.raises(SingularityError):
        coulomb_coefficients(ElectronConfiguration(np.zeros((2, 2)), 2))


def test_pair_stiffness_blocks():
    p = harmonic()
    c = equilibrium_positions(2, p)
    k0 = M_E * W**2
    reduced = electron_stiffness(p, c) / k0
    exact = electron_stiffness(p, c, exact_hessian=True) / k0
    np.testing.assert_allclose(reduced, [[1.5, -0.5], [-0.5, 1.5]], rtol=1e-10)
    np.testing.assert_allclose(exact, [[2.0, -1.0], [-1.0, 2.0]], rtol=1e-10)


def test_2d_stiffness_symmetric():
    p = quad(anis=1.4, xy=0.2)
    c = equilibrium_positions(4, p)
    k = electron_stiffness(p, c)
    np.testing.assert_allclose(k, k.T, rtol=1e-12, atol=1e-12 * np.abs(k).max())


# -- coupled matrices -------------------------------------------------------


def test_off_blocks_equal_minus_e_beta(r1):
    p = quad(anis=1.2)
    c = equilibrium_positions(3, p)
    rng = np.random.default_rng(1)
    arms = LeverArms(*(rng.uniform(-1, 1, (4, 3)) * 1e5))
    cm = coupled_matrices(r1, 0.61, p, c, arms)
    cmat = build_matrices(r1, gamma=0.61).Cmat
    beta = np.linalg.solve(cmat, np.vstack([arms.da_dx, arms.db_dx]))
    beta_y = np.linalg.solve(cmat, np.vstack([arms.da_dy, arms.db_dy]))
    np.testing.assert_allclose(cm.Cinv_t[:2, 2::2], -E_CHARGE * beta, rtol=1e-12)
    np.testing.assert_allclose(cm.Cinv_t[:2, 3::2], -E_CHARGE * beta_y, rtol=1e-12)
    b = beta_coefficients(build_matrices(r1, gamma=0.61), arms)
    np.testing.assert_allclose(b.xa, beta[0], rtol=1e-12)
    np.testing.assert_allclose(cm.Cinv_t, cm.Cinv_t.T, rtol=0, atol=0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_zero_arms_decouple(r1, n):
    p = harmonic()
    c = equilibrium_positions(n, p)
    arms = LeverArms.antisymmetric(n, 0.0)
    got = sorted(m.frequency for m in coupled_eigenmodes(coupled_matrices(r1, 0.61, p, c, arms)))
    circ = [m.frequency for m in eigenmodes(build_matrices(r1, gamma=0.61))]
    elec = np.sqrt(np.linalg.eigvalsh(electron_stiffness(p, c) / M_E)) / (2 * math.pi)
    np.testing.assert_allclose(got, sorted(circ + list(elec)), rtol=1e-12)


def test_arm_count_mismatch(r1):
    p = harmonic()
    with pytest.raises(InvalidParameterError):
        coupled_matrices(r1, 0.61, p, equilibrium_positions(2, p), LeverArms.antisymmetric(1, FIELD))


def test_overstrong_coupling_is_unstable(r1):
    p = harmonic()
    c = equilibrium_positions(1, p)
    with pytest.raises(UnstableCouplingError):
        coupled_eigenmodes(coupled_matrices(r1, 0.61, p, c, LeverArms.antisymmetric(1, 1e11)))


def test_coupled_modes_labelled(r1_sym):
    f_d = bare_differential(r1_sym, 0.61).frequency
    p = DotPotential.harmonic(2 * math.pi * (f_d + 3e9))
    modes = coupled_eigenmodes(
        coupled_matrices(r1_sym, 0.61, p, equilibrium_positions(1, p), LeverArms.antisymmetric(1, FIELD))
    )
    assert sorted(m.label for m in modes) == sorted([COMMON, DIFFERENTIAL, "electron-like"])


# -- coupling strength ------------------------------------------------------


def test_analytic_coupling_scaling():
    g1 = coupling_strength_analytic(FIELD, 3.62e9, 2.8e3, 3.62e9)
    assert 35e6 < g1 < 40e6
    assert coupling_strength_analytic(FIELD, 3.62e9, 4 * 2.8e3, 3.62e9) == pytest.approx(2 * g1, rel=1e-14)
    plain = coupling_strength_analytic(FIELD, 3.62e9, 2.8e3, 3.62e9, scr_factor=False)
    assert g1 / plain == pytest.approx(math.sqrt(2), rel=1e-14)
    with pytest.raises(InvalidParameterError):
        coupling_strength_analytic(FIELD, 3.62e9, -1.0, 3.62e9)


def _sweep(design, half_width=0.3e9, pts=31):
    f_d = bare_differential(design, 0.61).frequency
    return (2 * math.pi * (f_d - half_width), 2 * math.pi * (f_d + half_width), pts)


def test_gap_linear_in_arms(r1_sym):
    g1, _ = avoided_crossing_gap(r1_sym, 0.61, FIELD, _sweep(r1_sym))
    g2, _ = avoided_crossing_gap(r1_sym, 0.61, 2 * FIELD, _sweep(r1_sym))
    assert rel(g2, 2 * g1) < 0.01


def test_gap_vanishes_without_coupling(r1_sym):
    gap, w = avoided_crossing_gap(r1_sym, 0.61, 0.0, _sweep(r1_sym))
    assert gap < 1e-6 * 1e9
    assert rel(w / (2 * math.pi), bare_differential(r1_sym, 0.61).frequency) < 1e-6


def test_gap_sweep_must_bracket(r1_sym):
    f_d = bare_differential(r1_sym, 0.61).frequency
    with pytest.raises(InvalidParameterError):
        avoided_crossing_gap(r1_sym, 0.61, FIELD, (2 * math.pi * (f_d + 1e8), 2 * math.pi * (f_d + 1e9), 11))


# -- dispersive shift -------------------------------------------------------


def test_zero_arms_zero_shift(r1_sym):
    p = DotPotential.harmonic(2 * math.pi * 8e9)
    assert dispersive_shift(r1_sym, 0.61, p, 1, 0.0) == 0.0


def test_near_resonance_raises(r1_sym):
    f_d = bare_differential(r1_sym, 0.61).frequency
    with pytest.raises(NearResonanceError):
        dispersive_shift(r1_sym, 0.61, DotPotential.harmonic(2 * math.pi * f_d), 1, FIELD)


def test_shift_sign_follows_detuning(r1_sym):
    f_d = bare_differential(r1_sym, 0.61).frequency
    above = dispersive_shift(r1_sym, 0.61, DotPotential.harmonic(2 * math.pi * (f_d + 2e9)), 1, FIELD)
    below = dispersive_shift(r1_sym, 0.61, DotPotential.harmonic(2 * math.pi * (f_d - 2e9)), 1, FIELD)
    assert above < 0 < below


@pytest.mark.parametrize("detuning", [50e9, 100e9])
def test_doubling_far_detuned(r1_sym, detuning):
    f_d = bare_differential(r1_sym, 0.61).frequency
    p = DotPotential.harmonic(2 * math.pi * (f_d + detuning))
    s1 = dispersive_shift(r1_sym, 0.61, p, 1, FIELD)
    s2 = dispersive_shift(r1_sym, 0.61, p, 2, FIELD)
    assert rel(s2, 2 * s1) < 1e-6


def test_doubling_deviation_near_resonance(r1_sym):
    # two-level estimate: the n=2 shift falls short of doubling by about (g / detuning)^2
    f_d = bare_differential(r1_sym, 0.61).frequency
    g = coupling_strength_analytic(FIELD, f_d, bare_differential(r1_sym, 0.61).impedance, f_d)
    devs = []
    for det in (1e9, 2e9):
        p = DotPotential.harmonic(2 * math.pi * (f_d + det))
        s1 = dispersive_shift(r1_sym, 0.61, p, 1, FIELD)
        s2 = dispersive_shift(r1_sym, 0.61, p, 2, FIELD)
        devs.append(abs(s2 / (2 * s1) - 1))
    assert 0.3 < devs[0] / (g / 1e9) ** 2 < 3.0
    assert devs[1] < devs[0]


# -- sweeps -----------------------------------------------------------------


def test_sweep_records(r1_sym):
    omegas = np.linspace(*_sweep(r1_sym)[:2], 11)
    recs = sweep_dot_frequency(r1_sym, 0.61, FIELD, omegas)
    assert [r["omega_dot"] for r in recs] == pytest.approx(list(omegas))
    assert all(len(r["frequencies"]) == 3 and len(r["labels"]) == 3 for r in recs)


def test_common_mode_immune(r1_sym):
    f_c = modes_by_label(eigenmodes(build_matrices(r1_sym, gamma=0.61)))[COMMON].frequency
    omegas = np.linspace(*_sweep(r1_sym, 1e9)[:2], 41)
    for field in (FIELD, 4 * FIELD):
        for rec in sweep_dot_frequency(r1_sym, 0.61, field, omegas):
            fc = [f for f, lab in zip(rec["frequencies"], rec["labels"]) if lab == COMMON]
            assert len(fc) == 1 and rel(fc[0], f_c) < 1e-10


def test_tracking_follows_branches(r1_sym):
    lo, hi, _ = _sweep(r1_sym, 1e9)
    omegas = np.linspace(lo, hi, 81)
    recs = sweep_dot_frequency(r1_sym, 0.61, FIELD, omegas)
    f = np.array([r["frequencies"] for r in recs])
    labels = np.array([r["labels"] for r in recs])
    step = (hi - lo) / 80 / (2 * math.pi)
    assert np.max(np.abs(np.diff(f, axis=0))) < 1.01 * step
    # the lower hybrid branch starts electron-like and ends as the differential mode
    col = int(np.nonzero(labels[0] == "electron-like")[0][0])
    assert labels[-1, col] == DIFFERENTIAL
