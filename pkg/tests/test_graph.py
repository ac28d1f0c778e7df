import numpy as np
import pytest

from lrgmp.errors import GraphError, ParameterError
from lrgmp.graph.core import (
    Graph, SplitSpec, add_self_loops, from_arrays, from_edge_list, reverse_edge_index,
    symmetric_normalize,
)
from lrgmp.graph.generator import sbm_generate
from lrgmp.linalg.dense import make_rng


def test_edges_are_canonicalized():
    g = from_edge_list(3, [(2, 0), (0, 2), (1, 2), (0, 1)], np.zeros((3, 1)))
    assert g.edge_list().tolist() == [[0, 1], [0, 2], [1, 2], [2, 0]]
    assert g.row_offsets.tolist() == [0, 2, 3, 4]


def test_weights_and_features_follow_canonical_order():
    g = from_edge_list(3, [(1, 0), (0, 1)], np.zeros((3, 1)),
                       edge_feat=[[10.0], [20.0]], weights=[1.0, 2.0])
    assert g.edge_weight.tolist() == [2.0, 1.0]
    assert g.edge_feat[:, 0].tolist() == [20.0, 10.0]


def test_duplicate_edge_rejected():
    with pytest.raises(GraphError, match="duplicate"):
        from_edge_list(2, [(0, 1), (0, 1)], np.zeros((2, 1)))


def test_out_of_range_edge_rejected():
    with pytest.raises(GraphError):
        from_arrays(2, [0], [2], np.zeros((2, 1)))


def test_length_mismatch_rejected():
    with pytest.raises(GraphError):
        from_arrays(3, [0, 1], [1], np.zeros((3, 1)))


def test_undirected_expands_both_directions(path_graph):
    assert path_graph.num_edges == 4
    assert np.all(reverse_edge_index(path_graph) >= 0)


def test_undirected_asymmetric_weights_rejected():
    with pytest.raises(GraphError):
        Graph(2, np.array([0, 1, 2]), np.array([1, 0]), np.array([1.0, 2.0]),
              np.zeros((2, 1)), np.zeros((2, 0)), directed=False)


def test_non_finite_features_rejected():
    with pytest.raises(GraphError):
        from_edge_list(2, [(0, 1)], np.array([[np.nan], [0.0]]))


def test_add_self_loops_only_where_missing(small_graph):
    looped = add_self_loops(small_graph)
    assert looped.num_edges == small_graph.num_edges + 4
    loops = looped.src == looped.dst
    np.testing.assert_array_equal(looped.edge_weight[loops], 1.0)
    np.testing.assert_array_equal(looped.edge_feat[loops], 0.0)
    assert add_self_loops(looped).same_as(looped)


def test_symmetric_normalize_single_edge():
    g = from_edge_list(2, [(0, 1)], np.zeros((2, 1)), directed=False)
    _, w = symmetric_normalize(g)
    np.testing.assert_allclose(w, [1.0, 1.0])
    looped, w = symmetric_normalize(g, add_loops=True)
    assert looped.num_edges == 4
    np.testing.assert_allclose(w, 0.5)


def test_symmetric_normalize_zero_degree_gives_zero():
    g = from_edge_list(3, [(0, 1)], np.zeros((3, 1)))
    _, w = symmetric_normalize(g)
    assert w.tolist() == [0.0]


def test_symmetric_normalize_rejects_negative_weights():
    g = from_edge_list(2, [(0, 1)], np.zeros((2, 1)), weights=[-1.0])
    with pytest.raises(GraphError):
        symmetric_normalize(g)


def test_adjacency_and_edge_index(small_graph):
    dense = small_graph.adjacency().toarray()
    assert dense[2, 0] == 2.0 and dense[2, 3] == 1.5 and dense[0, 2] == 0.0
    assert small_graph.edge_index(2, 3) == 3
    assert small_graph.edge_index(0, 3) == -1


def test_in_degree(small_graph):
    assert small_graph.in_degree().tolist() == [1, 2, 1, 1]


def test_split_validation():
    SplitSpec([0], [1], [2]).validate(3)
    with pytest.raises(GraphError, match="overlap"):
        SplitSpec([0], [0], [2]).validate(3)
    with pytest.raises(GraphError):
        SplitSpec([0], [1], [5]).validate(3)


def test_sbm_degenerate_probabilities_give_two_cliques():
    g = sbm_generate(make_rng(0), [2, 2], 1.0, 0.0, d_v=2, feature_shift=1.0)
    assert g.edge_list().tolist() == [[0, 1], [1, 0], [2, 3], [3, 2]]
    assert g.labels.tolist() == [0, 0, 1, 1]
    assert not g.directed


def test_sbm_is_seeded():
    a = sbm_generate(make_rng(5), [10, 10], 0.3, 0.05, d_v=3, feature_shift=2.0)
    b = sbm_generate(make_rng(5), [10, 10], 0.3, 0.05, d_v=3, feature_shift=2.0)
    assert a.same_as(b)


def test_sbm_rejects_bad_probability():
    with pytest.raises(ParameterError):
        sbm_generate(make_rng(0), [5, 5], 1.5, 0.1, d_v=2, feature_shift=1.0)
