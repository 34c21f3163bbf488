import pytest

from dacspec import datasets
from dacspec.calib import CalibrationPoint, build_calibration

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def linear_siv():
    """E = 1.68 eV + 1.0 meV/GPa * P on 0..100 GPa."""
    pts = [CalibrationPoint(p, 1.0, 1.68 + 0.001 * p, 0.001) for p in range(0, 101, 10)]
    return build_calibration("SiV", pts)


@pytest.fixture(scope="session")
def siv_cal():
    return datasets.load_calibration("SiV")


@pytest.fixture(scope="session")
def gev_cal():
    return datasets.load_calibration("GeV")


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
