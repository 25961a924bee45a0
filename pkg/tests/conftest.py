import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from thlasso import normalize_columns  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: slow acceptance gate (still part of the default run)")


@pytest.fixture
def record():
    """Append a one-line acceptance verdict shown in the terminal summary."""
    def add(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_instance(rng, n, p, k=None, noise=0.5):
    X = normalize_columns(rng.standard_normal((n, p))).data
    k = rng.integers(0, p + 1) if k is None else k
    beta = np.zeros(p)
    supp = rng.choice(p, size=k, replace=False)
    beta[supp] = rng.standard_normal(k) * 2
    Y = X @ beta + noise * rng.standard_normal(n)
    return X, Y, beta
