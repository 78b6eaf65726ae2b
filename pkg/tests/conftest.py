import pytest
from hypothesis import HealthCheck, settings

from zrecur.presets import resolve

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def lazy():
    return resolve("lazy-walk")


@pytest.fixture(scope="session")
def uniform2():
    return resolve("uniform2")


@pytest.fixture(scope="session")
def golden():
    return resolve("golden-mean")


@pytest.fixture(scope="session")
def bern03():
    return resolve("bernoulli-0.3")


@pytest.fixture(scope="session")
def nonarith2():
    return resolve("uniform2-nonarith")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
