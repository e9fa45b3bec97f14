import pytest

from polariton import CouplingModel, SystemParams, calibrate_parametric_cavity

E12 = 152.0
RABI = 16.5

_CRITERIA = []


@pytest.fixture
def reference_params():
    """152 meV transition, cavity resonant at 60 deg, 16.5 meV Rabi energy."""
    return SystemParams(E12, calibrate_parametric_cavity(E12, 60.0), CouplingModel(RABI))


@pytest.fixture
def criterion():
    def record(label, passed, detail):
        _CRITERIA.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")

