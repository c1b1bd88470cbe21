import pytest

from invdelay.config import ExperimentConfig
from invdelay.device import DeviceParams, PhysicalConstants, ReferenceModelConfig
from invdelay.harness import build_current, build_delay, select_build_testcases

ACCEPTANCE_LINES = []


@pytest.fixture
def ref():
    # reference device, W = 1 um
    return DeviceParams(L=90e-9, W=1e-6, t_ox=3.0e-9, V_th0=0.4, u0=550e-4)


@pytest.fixture
def consts():
    return PhysicalConstants()


@pytest.fixture
def surrogate():
    return ReferenceModelConfig()


@pytest.fixture(scope="session")
def config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def current_model(config):
    return build_current(config)


@pytest.fixture(scope="session")
def build_testcases(current_model, config):
    return select_build_testcases(current_model, config)


@pytest.fixture(scope="session")
def delay_model(current_model, config, build_testcases):
    return build_delay(current_model, config, build_testcases)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
