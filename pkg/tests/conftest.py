import pytest

from radiofp.channel import NoiseModel
from radiofp.pipeline import ChannelSetup
from radiofp.scenario import DeploymentConfig, build_links

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def config():
    return DeploymentConfig()


@pytest.fixture(scope="session")
def links(config):
    return build_links(config)


@pytest.fixture(scope="session")
def quiet_setup():
    return ChannelSetup(noise=NoiseModel(0.0, 1))


@pytest.fixture(scope="session")
def noisy_setup():
    return ChannelSetup()
