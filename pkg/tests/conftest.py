import numpy as np
import pytest

from tippetop import BodyParams

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture
def fig2a():
    return BodyParams.scaled(a=0.29, i1=0.55, i3=0.51, mu_r=1.0)


@pytest.fixture
def fig2b():
    return BodyParams.scaled(a=0.29, i1=0.46, i3=0.51, mu_r=1.0)


@pytest.fixture
def fig2c():
    return BodyParams.scaled(a=0.29, i1=0.51, i3=0.51, mu_r=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
