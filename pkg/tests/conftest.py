import numpy as np
import pytest

from ciaug import Graph

_VERDICTS = []


def record_verdict(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'} {name}: {detail}"
    _VERDICTS.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict():
    """Record one acceptance-criterion verdict line."""
    return record_verdict


def make_graph(n, pairs, weights=None, **kw):
    return Graph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2), weights, **kw)


@pytest.fixture
def k3():
    return make_graph(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def p2():
    return make_graph(2, [(0, 1)])
