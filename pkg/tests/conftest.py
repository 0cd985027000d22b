import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")

SUITE_BUDGET = 60.0
_start = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_sessionstart(session):
    _start["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # only meaningful for a run over the whole suite
    if config.getoption("keyword") or config.args not in ([], ["tests"]):
        return
    elapsed = time.perf_counter() - _start["t"]
    status = "PASS" if elapsed < SUITE_BUDGET else "FAIL"
    terminalreporter.write_line(f"criterion 8 (full suite runtime): {status} {elapsed:.1f}s, budget {SUITE_BUDGET:.0f}s")
