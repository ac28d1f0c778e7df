import numpy as np
import pytest

from lrgmp.backbone.model import (
    BackboneSpec, Head, LayerWeights, PromptState, accuracy, cross_entropy, fingerprint,
    forward, init_backbone, loss_and_backward, predict,
)
from lrgmp.config import LAYER_KINDS
from lrgmp.conformance.oracle import random_graph
from lrgmp.errors import ParameterError, ShapeError
from lrgmp.graph.core import symmetric_normalize
from lrgmp.linalg.dense import make_rng
from lrgmp.optimize.trainer import TrainConfig, init_prompt


def _head(rng, d, c=3):
    return Head(rng.standard_normal((d, c)), rng.standard_normal(c))


def test_zero_initialized_prompts_leave_the_backbone_unchanged():
    rng = make_rng(5)
    for i in range(50):
        graph = random_graph(rng, (2, 12))
        kind = LAYER_KINDS[i % 3]
        backbone = init_backbone(kind, (graph.d_v, 4, 3), graph.d_e, bool(i % 2), rng)
        head = _head(rng, 3)
        plain, _ = forward(backbone, graph, None, head)
        for prompt_kind in ("lr_gmp", "cond_lr_gmp"):
            state = init_prompt(prompt_kind, backbone, graph, (0, 1), TrainConfig(r=2), rng)
            if prompt_kind == "cond_lr_gmp":
                for p in state.layers.values():
                    p["W"][:] = 0.0
            prompted, _ = forward(backbone, graph, state, head)
            np.testing.assert_array_equal(prompted, plain)


def test_gcn_layer_matches_dense_propagation(small_graph, rng):
    backbone = init_backbone("gcn", (2, 3), 1, True, rng)
    out, cache = forward(backbone, small_graph)
    lg, coef = symmetric_normalize(cache.layer_graph)
    prop = np.zeros((4, 4))
    np.add.at(prop, (lg.dst, lg.src), coef)
    lw = backbone.layers[0]
    expect = np.maximum(prop @ small_graph.node_feat @ lw.w[:2] + lw.b, 0.0)
    np.testing.assert_allclose(out, expect, atol=1e-12)


def test_mpnn_layer_uses_edge_features(small_graph, rng):
    backbone = init_backbone("mpnn", (2, 2), 1, False, rng)
    lw = backbone.layers[0]
    out, _ = forward(backbone, small_graph)
    agg = np.array([[2.0, 2.0, 6.0], [1.5, -0.5, 6.0], [0.0, 0.5, 1.0], [1.5, 1.5, 6.0]])
    expect = np.maximum(small_graph.node_feat @ lw.w_self + agg @ lw.w + lw.b, 0.0)
    np.testing.assert_allclose(out, expect, atol=1e-12)


def test_weights_are_read_only(rng):
    backbone = init_backbone("gin", (2, 3), 0, False, rng)
    with pytest.raises(ValueError):
        backbone.layers[0].w[0, 0] = 1.0
    with pytest.raises(ValueError):
        backbone.layers[0].b2[0] = 1.0


def test_fingerprint_tracks_weights():
    a = init_backbone("gcn", (3, 2), 1, True, make_rng(0))
    b = init_backbone("gcn", (3, 2), 1, True, make_rng(0))
    c = init_backbone("gcn", (3, 2), 1, True, make_rng(1))
    assert fingerprint(a) == fingerprint(b)
    assert fingerprint(a) != fingerprint(c)
    assert len(fingerprint(a)) == 64


def test_backbone_shape_validation():
    with pytest.raises(ShapeError):
        BackboneSpec("gcn", (2, 3), 0, False, (LayerWeights(np.zeros((3, 3)), np.zeros(3)),))
    with pytest.raises(ShapeError):
        BackboneSpec("mpnn", (2, 3), 0, False, (LayerWeights(np.zeros((2, 3)), np.zeros(3)),))
    with pytest.raises(ParameterError):
        BackboneSpec("gat", (2, 3), 0, False, (LayerWeights(np.zeros((2, 3)), np.zeros(3)),))


def test_forward_rejects_mismatched_graph(small_graph, rng):
    with pytest.raises(ShapeError):
        forward(init_backbone("gcn", (3, 2), 1, False, rng), small_graph)
    with pytest.raises(ShapeError):
        forward(init_backbone("gcn", (2, 2), 0, False, rng), small_graph)


def test_graph_task_returns_one_row(small_graph, rng):
    backbone = init_backbone("gin", (2, 4, 3), 1, True, rng)
    logits, cache = forward(backbone, small_graph, head=_head(rng, 3, 2), task="graph")
    assert logits.shape == (1, 2)
    np.testing.assert_allclose(cache.readout, cache.H[-1].mean(axis=0, keepdims=True))


def test_cross_entropy_of_uniform_logits():
    loss, grad = cross_entropy(np.zeros((3, 2)), [0, 1, 1], [0, 2])
    assert loss == pytest.approx(np.log(2.0))
    np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-15)
    np.testing.assert_array_equal(grad[1], 0.0)
    with pytest.raises(ParameterError):
        cross_entropy(np.zeros((3, 2)), [0, 1, 1], [])
    with pytest.raises(ParameterError):
        cross_entropy(np.zeros((3, 2)), [0, 5, 1], [1])


def test_predict_breaks_ties_to_lowest_class():
    assert predict(np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]])).tolist() == [0, 1]
    assert accuracy(np.array([[1.0, 0.0], [0.0, 1.0]]), [0, 0], [0, 1]) == 0.5


def test_prompt_state_errors(small_graph, rng):
    with pytest.raises(ParameterError):
        PromptState("mystery")
    with pytest.raises(ParameterError):
        PromptState("lr_gmp", {0: {}}).layer_spec(0)
    backbone = init_backbone("gcn", (2, 3, 3), 1, False, rng)
    state = init_prompt("lr_gmp", backbone, small_graph, (0,), TrainConfig(), rng)
    with pytest.raises(ParameterError):
        forward(backbone, small_graph, state, placement=(1,))


def test_backward_needs_a_head(small_graph, rng):
    _, cache = forward(init_backbone("gcn", (2, 2), 1, False, rng), small_graph)
    with pytest.raises(ParameterError):
        loss_and_backward(cache, small_graph.labels, [0, 1])


def test_unprompted_backward_only_touches_head(small_graph, rng):
    backbone = init_backbone("mpnn", (2, 3), 1, False, rng)
    _, cache = forward(backbone, small_graph, head=_head(rng, 3, 2))
    _, grads = loss_and_backward(cache, small_graph.labels, [0, 1])
    assert sorted(grads) == ["head/b", "head/w"]
