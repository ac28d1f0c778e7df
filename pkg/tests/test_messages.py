import numpy as np
import pytest

from lrgmp.errors import ShapeError
from lrgmp.graph.core import from_edge_list
from lrgmp.linalg.dense import make_rng
from lrgmp.message.engine import (
    Attention, ConcatMPNN, GcnNorm, MessageMatrix, aggregate, attention_coefficients,
    build_messages, message_graph,
)
from lrgmp.message.kernels import JIT_AVAILABLE, scatter_rows

# Rows A_vu [H_u || E_vu] for tests/fixtures/small_graph.json in canonical order
SMALL_MESSAGES = [
    [1.0, 0.0, 1.0],        # 0 -> 1, A = 1
    [0.0, 0.5, 1.0],        # 1 -> 2, A = 0.5
    [2.0, 2.0, 6.0],        # 2 -> 0, A = 2
    [1.5, 1.5, 6.0],        # 2 -> 3, A = 1.5
    [0.5, -0.5, 5.0],       # 3 -> 1, A = 1
]


def test_concat_messages(small_graph):
    M = build_messages(small_graph, small_graph.node_feat)
    assert (M.d_v_span, M.d_e_span) == (2, 1)
    np.testing.assert_array_equal(M.mat, SMALL_MESSAGES)


def test_sum_and_mean_aggregation(small_graph):
    M = build_messages(small_graph, small_graph.node_feat, ConcatMPNN())
    np.testing.assert_array_equal(
        aggregate(small_graph, M),
        [[2.0, 2.0, 6.0], [1.5, -0.5, 6.0], [0.0, 0.5, 1.0], [1.5, 1.5, 6.0]],
    )
    np.testing.assert_array_equal(aggregate(small_graph, M, "mean")[1], [0.75, -0.25, 3.0])


def test_node_without_incoming_edges_gets_zero_row():
    g = from_edge_list(3, [(0, 1)], np.ones((3, 2)))
    agg = aggregate(g, build_messages(g, g.node_feat))
    np.testing.assert_array_equal(agg[[0, 2]], 0.0)


def test_aggregate_is_linear_on_exact_values(small_graph):
    rng = make_rng(0)
    a = rng.integers(-8, 8, size=(5, 3)).astype(float)
    b = rng.integers(-8, 8, size=(5, 3)).astype(float)
    agg = lambda x: aggregate(small_graph, MessageMatrix(x, 2, 1))
    np.testing.assert_array_equal(agg(a + b), agg(a) + agg(b))


def test_aggregate_shape_mismatch(small_graph):
    with pytest.raises(ShapeError):
        aggregate(small_graph, MessageMatrix(np.zeros((4, 3)), 2, 1))


def test_h_rows_must_match_nodes(small_graph):
    with pytest.raises(ShapeError):
        build_messages(small_graph, np.zeros((3, 2)))


def test_scatter_kernels_agree():
    rng = make_rng(2)
    rows = rng.standard_normal((50, 4))
    index = rng.integers(0, 7, size=50)
    ref = scatter_rows(rows, index, 7, use_jit=False)
    np.testing.assert_array_equal(scatter_rows(rows, index, 7, use_jit=JIT_AVAILABLE), ref)
    np.testing.assert_allclose(ref, [rows[index == t].sum(axis=0) for t in range(7)], atol=1e-12)


def test_scatter_handles_vectors():
    out = scatter_rows(np.array([1.0, 2.0, 3.0]), np.array([1, 1, 0]), 2)
    assert out.tolist() == [3.0, 3.0]


def test_gcn_messages_zero_edge_block(small_graph):
    fn = GcnNorm(add_self_loops=True)
    M = build_messages(small_graph, small_graph.node_feat, fn)
    assert M.num_edges == message_graph(small_graph, fn).num_edges == 9
    np.testing.assert_array_equal(M.mat[:, 2:], 0.0)


def test_attention_coefficients_normalize_per_destination(small_graph):
    rng = make_rng(4)
    fn = Attention(rng.standard_normal((2, 3)), rng.standard_normal(6))
    alpha = attention_coefficients(small_graph, small_graph.node_feat, fn.W, fn.a, fn.slope)
    per_node = scatter_rows(alpha, small_graph.dst, small_graph.num_nodes)
    np.testing.assert_allclose(per_node, 1.0, atol=1e-12)
    M = build_messages(small_graph, small_graph.node_feat, fn)
    np.testing.assert_array_equal(M.mat[:, 2:], 0.0)


def test_attention_rejects_bad_vector():
    with pytest.raises(ShapeError):
        Attention(np.ones((2, 3)), np.ones(5))
