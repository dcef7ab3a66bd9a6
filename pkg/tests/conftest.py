import numpy as np
import pytest

from kdvlab import profiles
from kdvlab.spectral import Profile


def cosine(n=64, amplitude=1.0, mode=1):
    return Profile.from_function(lambda x: amplitude * np.cos(2 * np.pi * mode * x), n)


@pytest.fixture
def cos_profile():
    return cosine()


@pytest.fixture(scope="session")
def family():
    return profiles.default_family(8, n=256)


@pytest.fixture(scope="session")
def small_line_bump():
    return profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
