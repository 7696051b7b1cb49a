import sys

import numpy as np
import pytest

from harsanyi.game_oracle import ValueTable


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_table():
    """u = [0, 1, 1, 3] over two players."""
    return ValueTable([0.0, 1.0, 1.0, 3.0])


def random_table(rng, n, baseline=None):
    values = rng.uniform(-1.0, 1.0, size=1 << n)
    if baseline is not None:
        values[0] = baseline
    return ValueTable(values)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
