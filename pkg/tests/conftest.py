import os

import numpy as np
import pytest

from orrsom.profiles import BlasiusProfile, profile_bounds, solve_blasius

A_REF = 0.179
R_REF = 580.0

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


def seed() -> int:
    return int(os.environ.get("ORRSOM_SEED", "0"))


@pytest.fixture
def rng():
    return np.random.default_rng(seed())


@pytest.fixture(scope="session")
def blasius_solution():
    return solve_blasius()


@pytest.fixture(scope="session")
def blasius(blasius_solution):
    return BlasiusProfile(blasius_solution)


@pytest.fixture(scope="session")
def blasius_bounds(blasius):
    return profile_bounds(blasius)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
