import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def ket(*amps):
    from gemengelab.hilbert import StateVector

    return StateVector(np.array(amps, dtype=complex))


_ACCEPTANCE_KEY = pytest.StashKey[list]()
_START_KEY = pytest.StashKey[float]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []
    config.stash[_START_KEY] = time.perf_counter()


@pytest.fixture
def acceptance_log(request):
    """Record ``(criterion, passed, summary)`` lines for the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: int, passed: bool, summary: str):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {summary}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[_ACCEPTANCE_KEY]
    if not lines:
        return
    elapsed = time.perf_counter() - config.stash[_START_KEY]
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    terminalreporter.write_line(f"whole run: {elapsed:.1f} s (budget 60 s): {'PASS' if elapsed < 60 else 'FAIL'}")
