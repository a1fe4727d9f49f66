import numpy as np
import pytest

from nems_chaos.spin import SpinParams


@pytest.fixture
def default_spin():
    return SpinParams()


def random_couplings(rng, n, scale=1.5):
    return rng.normal(0.0, scale, n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
