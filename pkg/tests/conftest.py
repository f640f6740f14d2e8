import numpy as np
import pytest
from numba import njit


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@njit(cache=True)
def brute_sign_sums(x, y):
    """O(T^2) sums of sign(dx) sign(dy), sign(dx)^2 and sign(dy)^2 over t < s."""
    sxy = 0
    sxx = 0
    syy = 0
    n = x.size
    for t in range(n):
        for s in range(t + 1, n):
            a = np.sign(x[t] - x[s])
            b = np.sign(y[t] - y[s])
            sxy += int(a * b)
            sxx += int(a * a)
            syy += int(b * b)
    return sxy, sxx, syy


def brute_kendall(x, y):
    sxy, sxx, syy = brute_sign_sums(np.asarray(x, float), np.asarray(y, float))
    return float(sxy) / (np.sqrt(float(sxx)) * np.sqrt(float(syy)))


def numerical_rank(m, rel=1e-8):
    lam = np.linalg.eigvalsh(m)
    return int(np.sum(lam > rel * lam[-1]))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
