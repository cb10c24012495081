import numpy as np
import pytest

from qgscatter import kernels
from qgscatter.graph import Edge, MetricGraph, Vertex


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compile (or no-op on the numpy path) before anything is timed
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_graph(vertices, edges):
    """vertices: (id, coupling, leads) tuples; edges: (id, u, v, length)."""
    return MetricGraph(
        tuple(Vertex(i, c, l) for i, c, l in vertices),
        tuple(Edge(i, u, v, ln) for i, u, v, ln in edges),
    )


@pytest.fixture
def lead_only_vertex():
    return make_graph([("1", 2.0, 1)], [])


@pytest.fixture
def interval_with_lead():
    # lead at V1, compact edge of length 1 to V2
    return make_graph(
        [("1", 1.5, 1), ("2", -0.7, 0)],
        [("e", "1", "2", 1.0)],
    )


@pytest.fixture
def two_lead_interval():
    return make_graph(
        [("1", 1.7, 1), ("2", -2.3, 1)],
        [("e", "1", "2", 1.0)],
    )


@pytest.fixture
def ring_with_tail():
    # 4 vertices, 5 edges (one parallel pair -> cycle), 2 leads
    return make_graph(
        [("1", 0.8, 1), ("2", -1.4, 0), ("3", 2.1, 1), ("4", 0.3, 0)],
        [
            ("a", "1", "2", 0.83),
            ("b", "2", "3", 1.21),
            ("c", "3", "4", 0.64),
            ("d", "4", "1", 1.57),
            ("e", "2", "4", 0.97),
        ],
    )
