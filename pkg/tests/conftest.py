import numpy as np
import pytest

from wsma_mud.channel import make_link
from wsma_mud.numerics import RandomStream
from wsma_mud.signatures import generate_grassmann, select_sequences


@pytest.fixture(scope="session")
def grassmann_4x2():
    return generate_grassmann(4, 2, RandomStream(0))


@pytest.fixture(scope="session")
def link_k2(grassmann_4x2):
    return make_link(2, 2, 3, 4, select_sequences(grassmann_4x2, 2))


@pytest.fixture(scope="session")
def link_k4(grassmann_4x2):
    return make_link(4, 2, 3, 4, grassmann_4x2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
