import numpy as np
import pytest

from lrgmp.errors import GraphError, ParameterError
from lrgmp.graph.core import from_edge_list
from lrgmp.graph.perturb import random_flip, targeted_flip, toggle_pairs
from lrgmp.linalg.dense import make_rng


def _complete(n: int):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return from_edge_list(n, pairs, np.zeros((n, 1)), directed=False)


def _empty(n: int, directed: bool = False):
    return from_edge_list(n, np.zeros((0, 2)), np.zeros((n, 1)), directed=directed)


def test_random_flip_zero_is_identity(path_graph):
    assert random_flip(path_graph, 0.0, make_rng(0)) is path_graph


def test_random_flip_on_complete_graph_only_removes():
    g = _complete(4)                                # 6 undirected pairs
    out = random_flip(g, 0.5, make_rng(3))          # floor(0.5 * 6) = 3 flips
    assert out.num_edges == 6
    assert not out.directed


def test_random_flip_count_uses_existing_pairs():
    out = random_flip(_empty(5), 0.9, make_rng(0))
    assert out.num_edges == 0


def test_random_flip_is_seeded():
    g = _complete(6)
    a = random_flip(g, 0.4, make_rng(11))
    b = random_flip(g, 0.4, make_rng(11))
    assert a.same_as(b)


def test_random_flip_rejects_bad_fraction(path_graph):
    with pytest.raises(ParameterError):
        random_flip(path_graph, 1.5, make_rng(0))


def test_targeted_flip_full_budget_connects_target():
    out = targeted_flip(_empty(5), 0, 4, make_rng(0))
    assert out.num_edges == 8
    assert np.all((out.src == 0) | (out.dst == 0))


def test_targeted_flip_directed_points_into_target():
    out = targeted_flip(_empty(3, directed=True), 2, 2, make_rng(0))
    assert out.edge_list().tolist() == [[0, 2], [1, 2]]


def test_targeted_flip_errors(path_graph):
    with pytest.raises(ParameterError):
        targeted_flip(path_graph, 0, 3, make_rng(0))
    with pytest.raises(ParameterError):
        targeted_flip(path_graph, 0, -1, make_rng(0))
    with pytest.raises(GraphError):
        targeted_flip(path_graph, 9, 1, make_rng(0))


def test_toggle_pairs_adds_unit_edges_and_removes_existing():
    g = from_edge_list(3, [(0, 1)], np.zeros((3, 1)), edge_feat=[[2.0]], weights=[3.0], directed=False)
    out = toggle_pairs(g, np.array([[0, 1], [1, 2]]))
    assert out.edge_list().tolist() == [[1, 2], [2, 1]]
    np.testing.assert_array_equal(out.edge_weight, 1.0)
    np.testing.assert_array_equal(out.edge_feat, 0.0)
