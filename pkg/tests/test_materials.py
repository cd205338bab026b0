import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from scrkit.circuit import DIFFERENTIAL, build_matrices, eigenmodes, modes_by_label
from scrkit.errors import InvalidParameterError
from scrkit.materials import FilmProperties, fit_power_law, scaling_predict, sheet_inductance, wire_inductance

pos = st.floats(1e-7, 1e-2)


def test_sheet_inductance_tin():
    assert sheet_inductance(361.0, 2.80) * 1e12 == pytest.approx(178.0, abs=1.0)
    assert FilmProperties(361.0, 2.80).l_sq == sheet_inductance(361.0, 2.80)


def test_sheet_inductance_proportionality():
    assert sheet_inductance(722.0, 2.80) == pytest.approx(2 * sheet_inductance(361.0, 2.80), rel=1e-14)
    assert sheet_inductance(361.0, 5.60) == pytest.approx(0.5 * sheet_inductance(361.0, 2.80), rel=1e-14)


def test_table_inductance_implies_sheet_value(r1):
    l_sq = r1.L * r1.width / r1.length
    assert l_sq * 1e12 == pytest.approx(173.5, abs=0.1)
    assert wire_inductance(l_sq, r1.length, r1.width) == pytest.approx(r1.L, rel=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_positive_inputs(bad):
    with pytest.raises(InvalidParameterError):
        sheet_inductance(bad, 2.8)
    with pytest.raises(InvalidParameterError):
        wire_inductance(1e-10, bad, 1e-6)


def test_impedance_boost_identity():
    r = scaling_predict(1.08e-3, 1.6e-6, 3.62e9, 2.66e3, 0.54e-3, 0.2e-6)
    assert r.f0_ratio == pytest.approx(1.0, abs=1e-12)
    assert r.z_ratio == pytest.approx(4.0, abs=1e-12)
    assert r.z == pytest.approx(4 * 2.66e3, rel=1e-12)


def test_identity_scaling():
    r = scaling_predict(1e-3, 1e-6, 4e9, 2e3, 1e-3, 1e-6)
    assert (r.f0_ratio, r.z_ratio) == (1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(pos, pos, pos, pos)
def test_two_impedance_routes_agree(l, w, l2, w2):
    r = scaling_predict(l, w, 1e9, 1e3, l2, w2)
    assert r.z_ratio_product == pytest.approx(r.z_ratio, rel=1e-10)


def test_power_law_exact_recovery():
    x = np.linspace(0.5, 2.0, 7)
    f = fit_power_law(x, 3.0 * x**-0.75)
    assert f.exponent == pytest.approx(-0.75, abs=1e-12)
    assert f.prefactor == pytest.approx(3.0, rel=1e-12)
    assert f.residual < 1e-12


@pytest.mark.parametrize("x,y", [([1, 2], [1, 2]), ([1, 2, -3], [1, 2, 3]), ([1, 2, 3], [1, 2])])
def test_power_law_rejects(x, y):
    with pytest.raises(InvalidParameterError):
        fit_power_law(x, y)


def test_table_exponents(table):
    ls, fs, zs = [], [], []
    for d in table:
        m = modes_by_label(eigenmodes(build_matrices(d, gamma=0.61)))[DIFFERENTIAL]
        ls.append(d.length)
        fs.append(m.frequency)
        zs.append(m.impedance)
    assert fit_power_law(ls, fs).exponent == pytest.approx(-0.75, abs=0.05)
    assert fit_power_law(ls, zs).exponent == pytest.approx(0.25, abs=0.05)
    # frequency ordering follows length
    assert all(np.diff(fs) > 0)
    assert math.isfinite(fit_power_law(ls, zs).residual)
