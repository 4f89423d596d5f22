import numpy as np
import pytest

from netanomaly.graph import from_edges


def random_graph(n, p, seed, weights=(0.01, 1.0)):
    rng = np.random.default_rng(seed)
    edges = [(a, b, float(rng.uniform(*weights))) for a in range(n) for b in range(n)
             if a != b and rng.random() < p]
    return from_edges(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line and assert it."""

    def _report(criterion: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert ok, detail

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
