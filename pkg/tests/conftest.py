import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DEVICES = Path(__file__).resolve().parents[1] / "devices"

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def devices():
    return DEVICES


@pytest.fixture(scope="session")
def montreal():
    from qocpulse.model import load_device_spec
    return load_device_spec(DEVICES / "montreal_q0.json")


@pytest.fixture(scope="session")
def montreal_pair():
    from qocpulse.model import load_device_spec
    return load_device_spec(DEVICES / "montreal_q01.json")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
