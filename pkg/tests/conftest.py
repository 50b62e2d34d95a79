import numpy as np
import pytest

from tiecast.graph import WeightedGraph, WeightSpace
from tiecast.partition import split


def random_graph(rng, n=None, p=None, space=WeightSpace.MAPPED, lo=0.01, hi=0.99):
    """Erdos-Renyi style graph with uniform weights in (lo, hi)."""
    n = n or int(rng.integers(3, 31))
    p = rng.uniform(0.15, 0.6) if p is None else p
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, float(rng.uniform(lo, hi))))
    if len(edges) < 2:
        edges = [(0, 1, 0.5), (1, 2, 0.25)]
    return WeightedGraph([f"n{i}" for i in range(n)], edges, space)


def random_view(rng, **kw):
    """A random graph, and with probability 1/2 a training view of it with
    some weights withheld."""
    g = random_graph(rng, **kw)
    if rng.random() < 0.5 and g.number_of_edges() >= 5:
        return split(g, 0.2, int(rng.integers(1 << 30))).train
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_raw():
    """x, y share exactly z1 and z2, which have no other neighbors.

    w(x,z1)=2, w(y,z1)=2, w(x,z2)=1, w(y,z2)=3; x-y weight 5.
    """
    labels = ["x", "y", "z1", "z2"]
    return WeightedGraph(labels, [(0, 1, 5.0), (0, 2, 2.0), (1, 2, 2.0), (0, 3, 1.0), (1, 3, 3.0)],
                         WeightSpace.RAW)


@pytest.fixture
def toy_mapped():
    """The toy graph with every weight scaled by 1/10 so it is a valid mapped graph."""
    labels = ["x", "y", "z1", "z2"]
    return WeightedGraph(labels, [(0, 1, 0.5), (0, 2, 0.2), (1, 2, 0.2), (0, 3, 0.1), (1, 3, 0.3)],
                         WeightSpace.MAPPED)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, report))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, report in _ACCEPTANCE:
        label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
        detail = ""
        if outcome == "skipped" and isinstance(report.longrepr, tuple):
            detail = f"  ({report.longrepr[2]})"
        terminalreporter.write_line(f"{label}  {name}{detail}")
