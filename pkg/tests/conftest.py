import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from optopro import Dataset, Sweep  # noqa: E402

ACCEPTANCE_LINES = []


def record_acceptance(number, title, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number}: {title}  {detail}".rstrip()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_sweep(n, flashes, spikes, sweep_id=0):
    fl = np.zeros(n, dtype=np.uint8)
    sp = np.zeros(n, dtype=np.uint8)
    fl[list(flashes)] = 1
    sp[list(spikes)] = 1
    return Sweep(sweep_id, fl, sp)


@pytest.fixture
def s1():
    """Length 10, flashes at {1, 2, 5, 7}, spikes at {2, 8}."""
    return make_sweep(10, [1, 2, 5, 7], [2, 8])


@pytest.fixture
def s1_data(s1):
    return Dataset((s1,))
