import numpy as np
import pytest

from pdfrelay import instances
from pdfrelay.gaussian import GaussianTwoLevel


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def direct_net():
    return GaussianTwoLevel(g01=0, g02=0, g03=1, g12=0, g13=0, g23=0, P0=1, P1=1, P2=1)


@pytest.fixture
def mixed_net():
    return GaussianTwoLevel(g01=1.5, g02=1.2, g03=0.5, g12=1.1, g13=0.9, g23=1.3, P0=1, P1=1, P2=1)


@pytest.fixture
def dm_instance(rng):
    return instances.random_dm_instance(rng)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one acceptance line: ``acceptance("3", ok, "detail")``."""

    def record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
