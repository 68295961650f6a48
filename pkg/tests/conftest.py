import random

import pytest

from usimrank import UncertainGraph

# Canonical 3-vertex test graph used for hand-checked values:
# a -> b with 0.5, b -> a with 1.0, b -> c with 0.5.
A, B, C = 0, 1, 2
TOY_ARCS = [(A, B, 0.5), (B, A, 1.0), (B, C, 0.5)]


@pytest.fixture
def toy() -> UncertainGraph:
    return UncertainGraph(3, TOY_ARCS)


def random_graph(
    rng: random.Random,
    max_vertices: int = 6,
    max_arcs: int = 12,
    min_arcs: int = 1,
    self_loops: bool = True,
) -> UncertainGraph:
    """Small random uncertain graph, probabilities uniform on (0, 1]."""
    n = rng.randint(2, max_vertices)
    cells = [
        (u, v) for u in range(n) for v in range(n) if self_loops or u != v
    ]
    rng.shuffle(cells)
    m = rng.randint(min_arcs, min(max_arcs, len(cells)))
    arcs = [(u, v, 1.0 - rng.random()) for u, v in cells[:m]]
    return UncertainGraph(n, arcs)


def random_dag(
    rng: random.Random, max_vertices: int = 6, max_arcs: int = 10
) -> UncertainGraph:
    """Random graph whose support is acyclic (arcs go up the vertex order)."""
    n = rng.randint(3, max_vertices)
    cells = [(u, v) for u in range(n) for v in range(u + 1, n)]
    rng.shuffle(cells)
    m = rng.randint(1, min(max_arcs, len(cells)))
    arcs = [(u, v, 1.0 - rng.random()) for u, v in cells[:m]]
    return UncertainGraph(n, arcs)


def all_certain(g: UncertainGraph) -> UncertainGraph:
    """Copy of ``g`` with every arc probability forced to 1."""
    return UncertainGraph(g.vertex_count, [(u, v, 1.0) for u, v, _ in g.arcs()])
