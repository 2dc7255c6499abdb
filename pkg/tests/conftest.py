from __future__ import annotations

import sys

import numpy as np
import pytest

from dimerdefect.capacitance import make_context
from dimerdefect.core import reference_dimer
from dimerdefect.oracle import shared_capacitance


@pytest.fixture(scope="session")
def problem():
    return reference_dimer()


@pytest.fixture(scope="session")
def ctx(problem):
    return make_context(problem, 199)


@pytest.fixture(scope="session")
def ctx398(problem):
    return make_context(problem, 398)


@pytest.fixture(scope="session")
def cap100(problem):
    return shared_capacitance(100, problem)


@pytest.fixture(scope="session")
def cap200(problem):
    return shared_capacitance(200, problem)


def loop6(n):
    x = np.arange(n) / n
    return 1 - 0.4j + 0.2 * np.exp(2j * np.pi * x)


def loop7(n):
    x = np.arange(n) / n
    w1 = 1.2 - 1j + 0.2 * np.exp(2j * np.pi * x)
    w2 = 1.2 - 1j + 0.2 * np.exp(2j * np.pi * (x + np.pi / 2) - 0.2)
    return w1, w2


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
