from pathlib import Path

import numpy as np
import pytest

from lrgmp.graph.core import from_edge_list
from lrgmp.io.importer import load_graph_json
from lrgmp.linalg.dense import make_rng

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def small_graph():
    """4-node directed graph, d_V = 2, d_E = 1, weights (1, 0.5, 2, 1.5, 1)."""
    graph, _ = load_graph_json(FIXTURES / "small_graph.json")
    return graph


@pytest.fixture
def small_split():
    _, split = load_graph_json(FIXTURES / "small_graph.json")
    return split


@pytest.fixture
def path_graph():
    """Undirected path 0 - 1 - 2 with 1-D features 1, 2, 3."""
    return from_edge_list(3, [(0, 1), (1, 2)], np.array([[1.0], [2.0], [3.0]]), directed=False)
