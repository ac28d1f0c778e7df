import numpy as np
import pytest

from lrgmp.errors import GraphError, ParameterError, ShapeError, UnsupportedSpecError
from lrgmp.graph.core import from_edge_list
from lrgmp.prompt.zoo import (
    GDP_KINDS, EdgeMulti, EdgeSingle, EdgeWeightAdd, EdgeWeightMul, Hybrid, NodeMulti,
    NodeSingle, Subgraph, apply_gdp, assignment,
)


def test_every_family_is_registered():
    assert sorted(GDP_KINDS) == [
        "edge_multi", "edge_single", "edge_weight_add", "edge_weight_mul",
        "hybrid", "node_multi", "node_single", "subgraph",
    ]


def test_node_single_adds_to_every_row(small_graph):
    out = apply_gdp(small_graph, NodeSingle([1.0, -1.0]))
    np.testing.assert_array_equal(out.node_feat, small_graph.node_feat + [1.0, -1.0])
    assert out.num_edges == small_graph.num_edges


def test_node_multi_with_single_basis_row_is_node_single(small_graph):
    a = apply_gdp(small_graph, NodeMulti([[0.3, 0.7]], tau=0.2))
    b = apply_gdp(small_graph, NodeSingle([0.3, 0.7]))
    np.testing.assert_allclose(a.node_feat, b.node_feat, atol=1e-12)


def test_assignment_rows_are_distributions(small_graph):
    B = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    alpha = assignment(small_graph.node_feat, B, 0.5)
    assert alpha.shape == (4, 3)
    np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-12)


def test_node_prompt_width_mismatch(small_graph):
    with pytest.raises(ShapeError):
        apply_gdp(small_graph, NodeSingle([1.0, 2.0, 3.0]))


def test_edge_single_shifts_edge_features(small_graph):
    out = apply_gdp(small_graph, EdgeSingle([10.0]))
    assert out.edge_feat[:, 0].tolist() == [11.0, 12.0, 13.0, 14.0, 15.0]
    np.testing.assert_array_equal(out.node_feat, small_graph.node_feat)


def test_edge_prompts_need_edge_features(path_graph):
    with pytest.raises(UnsupportedSpecError):
        apply_gdp(path_graph, EdgeSingle([1.0]))
    with pytest.raises(UnsupportedSpecError):
        apply_gdp(path_graph, EdgeMulti([[1.0]]))


def test_edge_weight_prompts(small_graph):
    s = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    added = apply_gdp(small_graph, EdgeWeightAdd(s))
    np.testing.assert_array_equal(added.edge_weight, small_graph.edge_weight + s)
    scaled = apply_gdp(small_graph, EdgeWeightMul(s))
    np.testing.assert_array_equal(scaled.edge_weight, small_graph.edge_weight * s)
    with pytest.raises(ShapeError):
        apply_gdp(small_graph, EdgeWeightMul(s[:3]))


def test_asymmetric_weight_prompt_makes_graph_directed(path_graph):
    out = apply_gdp(path_graph, EdgeWeightMul([1.0, 2.0, 1.0, 1.0]))
    assert out.directed
    same = apply_gdp(path_graph, EdgeWeightMul([2.0, 2.0, 2.0, 2.0]))
    assert not same.directed


def test_hybrid_is_node_multi_then_weight_mul(small_graph):
    Z, s = np.array([[1.0, 0.0], [0.0, 2.0]]), np.linspace(0.5, 1.5, 5)
    out = apply_gdp(small_graph, Hybrid(Z, 0.7, s))
    ref = apply_gdp(apply_gdp(small_graph, NodeMulti(Z, 0.7)), EdgeWeightMul(s))
    assert out.same_as(ref)


def test_subgraph_union_numbers_prompt_nodes_after_originals(small_graph):
    spec = Subgraph([[9.0, 9.0], [8.0, 8.0]], link_node=[1, 3], link_prompt=[0, 1],
                    link_weight=[0.5, 2.0], link_feat=[[7.0], [6.0]],
                    internal=[[0, 1]], internal_weight=[1.0])
    out = apply_gdp(small_graph, spec)
    assert out.num_nodes == 6
    assert out.num_edges == small_graph.num_edges + 3
    assert out.labels.tolist() == [0, 1, 0, 1, -1, -1]
    assert out.edge_weight[out.edge_index(4, 1)] == 0.5
    assert out.edge_feat[out.edge_index(5, 3), 0] == 6.0
    assert out.edge_feat[out.edge_index(4, 5), 0] == 0.0


def test_subgraph_without_prompt_nodes_is_identity(small_graph):
    spec = Subgraph(np.zeros((0, 2)), [], [], [], np.zeros((0, 1)))
    assert apply_gdp(small_graph, spec) is small_graph


def test_subgraph_validation(small_graph):
    with pytest.raises(GraphError):
        Subgraph([[1.0, 1.0]], [0], [3], [1.0], [[0.0]])
    with pytest.raises(ShapeError):
        Subgraph([[1.0, 1.0]], [0, 1], [0], [1.0], [[0.0]])
    with pytest.raises(GraphError):
        apply_gdp(small_graph, Subgraph([[1.0, 1.0]], [7], [0], [1.0], [[0.0]]))


def test_basis_and_tau_validation():
    with pytest.raises(ParameterError):
        NodeMulti(np.zeros((0, 2)))
    with pytest.raises(ParameterError):
        EdgeMulti([[1.0]], tau=0.0)
