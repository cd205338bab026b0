from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from conftest import rel, symmetric_design
from scrkit.circuit import COMMON, DIFFERENTIAL
from scrkit.constants import GAMMA_MAX, GAMMA_MIN
from scrkit.errors import InvalidParameterError
from scrkit.verify import fit_gamma, predict_family, predicted_table, reference_from_family, splitting_report


def test_family_prediction(table):
    fam = predict_family(table, 0.61)
    assert len(fam) == 9
    freqs = [m.frequency for _, c, d in fam for m in (c, d)]
    assert len(freqs) == 18
    assert all(3e9 < f < 6e9 for f in freqs)
    r1 = fam[0]
    assert r1[0] == "R1" and rel(r1[2].frequency, 3.62e9) < 0.05
    assert r1[1].label == COMMON and r1[2].label == DIFFERENTIAL


def test_family_gamma_scaling(table):
    a = predict_family(table, 0.61)
    b = predict_family(table, 1.0)
    for (_, c1, d1), (_, c2, d2) in zip(a, b):
        assert c2.frequency == pytest.approx(c1.frequency * np.sqrt(0.61), rel=1e-12)
        assert d2.frequency == pytest.approx(d1.frequency * np.sqrt(0.61), rel=1e-12)


def test_family_concurrent_matches_serial(table):
    a = predict_family(table, 0.7)
    b = predict_family(table, 0.7, workers=4)
    assert [(n, c.frequency, d.frequency) for n, c, d in a] == [(n, c.frequency, d.frequency) for n, c, d in b]


@settings(max_examples=20, deadline=None)
@given(st.floats(GAMMA_MIN + 1e-3, GAMMA_MAX - 1e-3))
def test_gamma_recovery(table, gamma):
    rep = fit_gamma(table, reference_from_family(table, gamma))
    assert abs(rep.gamma_star - gamma) < 1e-4
    assert rep.max_abs_error < 1e-4
    assert not rep.multiple_minima


@pytest.mark.parametrize("gamma", [GAMMA_MIN, GAMMA_MAX])
def test_gamma_boundaries(table, gamma):
    rep = fit_gamma(table, reference_from_family(table, gamma))
    assert rep.gamma_star == pytest.approx(gamma, abs=1e-4)


def test_perturbed_references(table):
    ref = {k: 1.01 * v for k, v in reference_from_family(table, 0.61).items()}
    rep = fit_gamma(table, ref)
    assert rep.gamma_star < 0.61
    assert rep.max_abs_error < 0.02
    assert len(rep.modes) == 18


def test_frequencies_decrease_with_gamma(table):
    prev = None
    for g in np.linspace(GAMMA_MIN, 1.0, 8):
        cur = np.array([f for _, _, f, _ in predicted_table(table, g)])
        if prev is not None:
            assert np.all(cur < prev)
        prev = cur


def test_reference_validation(table):
    ref = reference_from_family(table, 0.61)
    with pytest.raises(InvalidParameterError):
        fit_gamma(table, {("R1", COMMON): 4e9})
    bad = dict(ref)
    bad[("R10", COMMON)] = 4e9
    with pytest.raises(InvalidParameterError):
        fit_gamma(table, bad)


def test_partial_references(table):
    full = reference_from_family(table, 0.7)
    ref = {k: v for k, v in full.items() if k[1] == DIFFERENTIAL}
    rep = fit_gamma(table, ref)
    assert len(rep.modes) == 9
    assert abs(rep.gamma_star - 0.7) < 1e-4


def test_report_dict(table):
    rep = fit_gamma(table, reference_from_family(table, 0.61))
    d = rep.as_dict()
    assert set(d) == {"gamma_star", "objective", "multiple_minima", "summary", "modes", "splittings"}
    assert len(d["splittings"]) == 9
    assert d["summary"]["rms_rel_error"] <= d["summary"]["max_abs_rel_error"]


def test_splitting_report(table):
    rows = splitting_report(table, 0.61)
    assert rows[0].exact > 0 and rows[-1].exact < 0
    assert all(abs(r.exact) < 200e6 and abs(r.approx) < 200e6 for r in rows)
    flat = splitting_report([symmetric_design(C=20e-15, C_x=1e-15, L=100e-9, L_t=5e-9)], 1.0)
    assert abs(flat[0].approx) < 1e3
