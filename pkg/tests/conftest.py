import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from conga.graph import Graph
from conga.partitioner import BuildParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Round count and expansion constants at which desk-size graphs get
# nontrivial hierarchies; the library defaults collapse to two levels there.
DESK = BuildParams(c_t=4.0, c_phi=0.5)


def cycle4():
    """4-cycle with edges 01, 12, 23, 30 of capacities 1, 2, 3, 4."""
    return Graph.from_edges(4, [(0, 1, 1), (1, 2, 2), (2, 3, 3), (3, 0, 4)])


def complete(n, cap=1.0):
    return Graph.from_edges(n, [(a, b, cap) for a in range(n) for b in range(a + 1, n)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
