import itertools
import math

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def brute_distance(u, v, m, p):
    deltas = [min(abs(a - b) % m, m - abs(a - b) % m) for a, b in zip(u, v)]
    if math.isinf(p):
        return float(max(deltas))
    return sum(x**p for x in deltas) ** (1.0 / p)


def brute_points(d, m):
    return list(itertools.product(range(m), repeat=d))


def urn_law(n, z):
    """Exact law of the minus count after n - 2 draws from (1, z), by dynamic programming."""
    probs = {1: 1.0}
    for step in range(n - 2):
        nxt = {}
        for k, p in probs.items():
            j = step + 2 - k  # plus count
            pm = k / (k + z * j)
            nxt[k + 1] = nxt.get(k + 1, 0.0) + p * pm
            nxt[k] = nxt.get(k, 0.0) + p * (1 - pm)
        probs = nxt
    out = np.zeros(n)
    for k, p in probs.items():
        out[k] = p
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
