import sys

import pytest

from scrkit.circuit import CircuitDesign
from scrkit.io import table_i


@pytest.fixture(scope="session")
def table():
    return table_i()


@pytest.fixture(scope="session")
def r1(table):
    return table[0]


@pytest.fixture(scope="session")
def r1_sym(r1):
    return r1.symmetrized()


def symmetric_design(L=100e-9, C=20e-15, C_x=1.5e-15, L_t=5e-9, name="sym"):
    return CircuitDesign(name, 1e-3, 1e-6, C, C, C_x, 0.0, 0.0, L, L_t)


def rel(a, b):
    return abs(a - b) / abs(b)




def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    if results is None or not results.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results.RESULTS):
        terminalreporter.write_line(results.RESULTS[k])
