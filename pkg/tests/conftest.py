import itertools

import numpy as np
import pytest

from holostab.complex import build_complex
from holostab.flow import run_stability
from holostab.weights import WeightProfile

# 7 vertices, one hole 2-4-5-3
ONE_HOLE_EDGES = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (5, 6), (4, 7), (6, 7)]
ONE_HOLE_TRIANGLES = [(1, 2, 3), (4, 5, 6), (4, 6, 7)]

# two filled blocks joined by the edges (2,4) and (3,5)
BRIDGED_EDGES = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (5, 6), (5, 7), (6, 7)]
BRIDGED_TRIANGLES = [(1, 2, 3), (4, 5, 6), (5, 6, 7)]

# 8 vertices, hole 2-3-4-5; only (1,2) or (5,6) can open a second hole on their own
SHOWCASE_EDGES = [
    (1, 2), (1, 3), (2, 3), (1, 8), (2, 8), (2, 5),
    (3, 4), (4, 5), (4, 6), (5, 6), (5, 7), (6, 7),
]
SHOWCASE_TRIANGLES = [(1, 2, 3), (1, 2, 8), (4, 5, 6), (5, 6, 7)]


@pytest.fixture
def one_hole():
    return build_complex(range(1, 8), ONE_HOLE_EDGES, ONE_HOLE_TRIANGLES)


@pytest.fixture
def bridged():
    return build_complex(range(1, 8), BRIDGED_EDGES, BRIDGED_TRIANGLES)


@pytest.fixture
def showcase():
    return build_complex(range(1, 9), SHOWCASE_EDGES, SHOWCASE_TRIANGLES)


@pytest.fixture
def showcase_profile(showcase):
    w1 = np.full(showcase.m, 0.5)
    w1[showcase.edge_id(1, 2)] = 0.7
    w1[showcase.edge_id(5, 6)] = 0.4
    return WeightProfile(showcase, w1)


@pytest.fixture
def random_complex():
    """Factory of seeded random clique complexes with weights in [0.5, 1.5]."""

    def make(seed, n=8, p=0.5):
        rng = np.random.default_rng(seed)
        edges = [pair for pair in itertools.combinations(range(n), 2) if rng.random() < p]
        # a spanning path keeps the graph connected
        edges = sorted(set(edges) | {(i, i + 1) for i in range(n - 1)})
        c = build_complex(range(n), edges)
        w1 = rng.uniform(0.5, 1.5, size=c.m)
        return c, WeightProfile(c, w1)

    return make


@pytest.fixture(scope="session")
def showcase_result():
    """One stability run on the showcase complex, shared by every test that inspects it."""
    c = build_complex(range(1, 9), SHOWCASE_EDGES, SHOWCASE_TRIANGLES)
    w1 = np.full(c.m, 0.5)
    w1[c.edge_id(1, 2)] = 0.7
    w1[c.edge_id(5, 6)] = 0.4
    return run_stability(c, WeightProfile(c, w1))
