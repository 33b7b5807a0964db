import numpy as np
import pytest
from hypothesis import settings

from chancoh import channels as ch

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def identity2():
    return ch.identity_channel(2)


@pytest.fixture
def dephasing2():
    return ch.dephasing_channel(2)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
