import itertools

import numpy as np
import pytest
from hypothesis import settings

from monodnf.core import Dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# (criterion, line) pairs appended by test_acceptance.py
ACCEPTANCE_LINES = []


def random_dataset(rng, n, p, density=0.5, pos=0.5):
    X = (rng.random((n, p)) < density).astype(np.uint8)
    y = (rng.random(n) < pos).astype(np.uint8)
    return Dataset.from_arrays(X, y)


def exhaustive_dataset(p, y):
    """All 2**p rows in binary order, with the given outcomes."""
    X = np.array(list(itertools.product((0, 1), repeat=p)), dtype=np.uint8)[:, ::-1]
    return Dataset.from_arrays(X, np.asarray(y, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
