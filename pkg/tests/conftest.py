import numpy as np
import pytest

from fagci.constellation import make_standard


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def qpsk():
    return make_standard("QAM", 4, 1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
