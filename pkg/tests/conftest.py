import pytest

from ccz_distill.noise import NoiseModel, apply_noise
from ccz_distill.protocol import assemble
from ccz_distill.sampler import Sampler


@pytest.fixture(scope="session")
def protocol():
    return assemble()


@pytest.fixture(scope="session")
def noisy_1e3(protocol):
    return apply_noise(protocol.circuit, NoiseModel(1e-3))


@pytest.fixture(scope="session")
def sampler_1e3(noisy_1e3):
    return Sampler(noisy_1e3)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
