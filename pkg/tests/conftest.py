import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from carnot.group import BUILTIN_GROUPS, builtin_group  # noqa: E402

GROUP_NAMES = sorted(BUILTIN_GROUPS)


@pytest.fixture(params=GROUP_NAMES)
def algebra(request):
    return builtin_group(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}"
        results = request.config.__dict__.setdefault("_acceptance", {})
        results[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.__dict__.get("_acceptance")
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
