import numpy as np
import pytest

from hetassoc.channel import LinkTable
from hetassoc.validation import random_instance


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """record(criterion, ok, detail): log one pass/fail line for the summary."""
    def record(criterion, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def instance_factory():
    def make(rng, num_bs, num_users):
        return random_instance(rng, num_bs, num_users)
    return make


def table(rate, power):
    return LinkTable.from_arrays(rate, power)
