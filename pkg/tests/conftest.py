import numpy as np
import pytest

from csprop import HarmonicModel, IntegratorOptions, KerrModel, PhaseScale

KERR_TC = np.pi / 50
KERR_Z = (0.0, 10.0)


@pytest.fixture
def kerr():
    return KerrModel()


@pytest.fixture
def ho():
    return HarmonicModel(mass=1.0, omega=1.0)


@pytest.fixture
def ho_scaled():
    scale = PhaseScale.from_mass_frequency(2.0, 1.5, hbar=0.7)
    return HarmonicModel(mass=2.0, omega=1.5, scale=scale, hbar=0.7)


@pytest.fixture
def analytic():
    return IntegratorOptions(method="auto")


@pytest.fixture
def numeric():
    return IntegratorOptions(method="rk4", steps_per_period=400)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
