import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from delaynet import DelayDistribution, NetworkTopology
from delaynet.generators import random_connected_topology

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def networks(draw, max_nodes=10, max_edges=24, low=0.0, high=10.0):
    """Connected multigraph with uniform random delays."""
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(1, max_nodes))
    l = draw(st.integers(max(n - 1, 1), max(max_edges, n - 1)))
    top = random_connected_topology(rng, n, l)
    return DelayDistribution(top, rng.uniform(low, high, size=l))


@pytest.fixture
def ring3():
    top = NetworkTopology.from_pairs(3, [(1, 2), (2, 3), (3, 1)])
    return DelayDistribution(top, [2.0, 3.0, 4.0])


@pytest.fixture
def pair():
    top = NetworkTopology.from_pairs(2, [(1, 2), (2, 1)])
    return DelayDistribution(top, [2.0, 3.0])


@pytest.fixture
def twocycle():
    top = NetworkTopology.from_pairs(2, [(1, 2), (2, 1), (2, 1)])
    return DelayDistribution(top, [1.0, 1.0, 2.0])


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
