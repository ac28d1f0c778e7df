import numpy as np
import pytest

from lrgmp.backbone.model import fingerprint, flatten_params, init_backbone
from lrgmp.errors import ConfigError, GraphError, ParameterError, UnsupportedSpecError
from lrgmp.graph.core import SplitSpec
from lrgmp.graph.generator import sbm_generate
from lrgmp.harness.fixture import certify_rank1_prompt, separable_fixture
from lrgmp.linalg.dense import make_rng
from lrgmp.optimize.optimizers import Adam, Sgd
from lrgmp.optimize.trainer import (
    TrainConfig, evaluate, init_prompt, resolve_placement, sample_few_shot, train,
    train_graphs,
)


@pytest.fixture
def sbm():
    graph = sbm_generate(make_rng(0), [12, 12], 0.4, 0.05, d_v=3, feature_shift=1.0)
    backbone = init_backbone("gcn", (3, 4, 4), 0, True, make_rng(1))
    return graph, backbone


def test_few_shot_split_sizes():
    labels = np.array([0] * 7 + [1] * 6 + [-1] * 2)
    split = sample_few_shot(labels, 2, make_rng(0))
    assert len(split.train) == 4
    assert len(split.val) == 2 + 2
    assert len(split.test) == 3 + 2
    assert np.all(labels[split.test] >= 0)
    split.validate(len(labels))


def test_few_shot_needs_enough_nodes():
    with pytest.raises(ParameterError):
        sample_few_shot([0, 0, 0, 1, 1], 1, make_rng(0))
    with pytest.raises(ParameterError):
        sample_few_shot([-1, -1], 1, make_rng(0))


@pytest.mark.parametrize("field, value", [
    ("epochs", 0), ("r", 0), ("lr", -1.0), ("tau", 0.0), ("optimizer", "lbfgs"),
    ("prompt_kind", "mystery"), ("placement", "top"), ("shots", 0),
])
def test_invalid_config(field, value):
    with pytest.raises(ConfigError):
        TrainConfig(**{field: value}).validate()


def test_resolve_placement():
    assert resolve_placement("first", 3) == (0,)
    assert resolve_placement("middle", 3) == (1,)
    assert resolve_placement("middle", 4) == (2,)
    assert resolve_placement("last", 3) == (2,)
    assert resolve_placement("all", 3) == (0, 1, 2)
    assert resolve_placement([2, 0, 2], 3) == (0, 2)
    with pytest.raises(ConfigError):
        resolve_placement([3], 3)


def test_zero_learning_rate_keeps_parameters(sbm):
    graph, backbone = sbm
    state = train(graph, backbone, TrainConfig(lr=0.0, epochs=3, prompt_kind="cond_lr_gmp"))
    rng = make_rng(np.random.SeedSequence(0).spawn(2)[1])
    fresh = init_prompt("cond_lr_gmp", backbone, graph, (0,), TrainConfig(), rng)
    for l, p in fresh.layers.items():
        for name, arr in p.items():
            np.testing.assert_array_equal(state.prompt.layers[l][name], arr)
    assert len({(r.loss, r.val_acc) for r in state.history}) == 1


def test_training_is_deterministic(sbm):
    graph, backbone = sbm
    config = TrainConfig(lr=0.01, epochs=20, prompt_kind="lr_gmp", seed=3)
    a = train(graph, backbone, config)
    b = train(graph, backbone, config)
    assert a.metrics() == b.metrics()
    assert a.split.train.tolist() == b.split.train.tolist()


def test_backbone_stays_frozen(sbm):
    graph, backbone = sbm
    before = fingerprint(backbone)
    state = train(graph, backbone, TrainConfig(lr=0.05, epochs=10, prompt_kind="cond_lr_gmp",
                                               placement="all"))
    assert fingerprint(backbone) == before == state.backbone_fingerprint


def test_best_state_reproduces_recorded_test_accuracy(sbm):
    graph, backbone = sbm
    state = train(graph, backbone, TrainConfig(lr=0.05, epochs=15, prompt_kind="node_multi"))
    assert evaluate(state, graph, state.split.test) == state.test_acc
    assert state.history[state.best_epoch - 1].val_acc == state.val_acc


def test_loss_decreases(sbm):
    graph, backbone = sbm
    state = train(graph, backbone, TrainConfig(lr=0.01, epochs=50, prompt_kind="cond_lr_gmp"))
    assert state.history[-1].loss < state.history[0].loss


@pytest.mark.parametrize("kind", ["none", "lr_gmp", "node_single", "edge_weight_add",
                                  "edge_weight_mul", "hybrid", "subgraph"])
def test_every_prompt_kind_trains(sbm, kind):
    graph, backbone = sbm
    state = train(graph, backbone, TrainConfig(lr=0.01, epochs=5, prompt_kind=kind, optimizer="sgd"))
    assert len(state.history) == 5
    assert 0.0 <= state.test_acc <= 1.0
    assert (state.prompt is None) == (kind == "none")


def test_explicit_split_is_used(small_graph, small_split):
    backbone = init_backbone("mpnn", (2, 3), 1, False, make_rng(0))
    state = train(small_graph, backbone, TrainConfig(epochs=2), split=small_split)
    assert state.split is small_split
    with pytest.raises(GraphError):
        train(small_graph, backbone, TrainConfig(epochs=2), split=SplitSpec([0], [0], [1]))


def test_edge_baselines_need_edge_features(sbm):
    graph, backbone = sbm
    with pytest.raises(UnsupportedSpecError):
        train(graph, backbone, TrainConfig(epochs=1, prompt_kind="edge_single"))


def test_optimizers_step_in_place():
    params = {"x": np.array([1.0, -2.0])}
    Sgd(0.5, momentum=0.0).step(params, {"x": np.array([2.0, 2.0])})
    np.testing.assert_array_equal(params["x"], [0.0, -3.0])
    params = {"x": np.array([1.0])}
    Adam(0.1).step(params, {"x": np.array([5.0])})
    assert params["x"][0] == pytest.approx(0.9)
    with pytest.raises(ConfigError):
        Adam(0.1, beta1=1.0)


def test_graph_training(sbm):
    _, backbone = sbm
    rng = make_rng(8)
    graphs, labels = [], []
    for i in range(12):
        c = i % 2
        shift = 1.5 if c else -1.5
        graphs.append(sbm_generate(rng, [4, 4], 0.5, 0.1, d_v=3, feature_shift=0.0))
        graphs[-1] = graphs[-1].with_node_feat(graphs[-1].node_feat + shift)
        labels.append(c)
    state = train_graphs(graphs, labels, backbone, TrainConfig(lr=0.05, epochs=10,
                                                               prompt_kind="cond_lr_gmp"))
    assert len(state.history) == 10
    assert len(state.split.train) == 2
    with pytest.raises(ConfigError):
        train_graphs(graphs, labels, backbone, TrainConfig(prompt_kind="lr_gmp"))
    with pytest.raises(ConfigError):
        train_graphs(graphs, labels[:-1], backbone, TrainConfig(prompt_kind="none"))


def test_parameters_are_shared_live_arrays(sbm):
    graph, backbone = sbm
    state = init_prompt("lr_gmp", backbone, graph, (0, 1), TrainConfig(r=3), make_rng(0))
    params = flatten_params(state, None)
    assert sorted(params) == ["prompt/0/U", "prompt/0/V", "prompt/1/U", "prompt/1/V"]
    params["prompt/0/U"] += 1.0
    assert state.layers[0]["U"][0, 0] == 1.0


# --- Separable fixture ---

def test_fixture_certificate():
    graph, backbone = separable_fixture(seed=0)
    cert = certify_rank1_prompt(graph, backbone)
    assert cert.passed
    assert cert.accuracy >= 0.95


def test_fixture_certificate_on_held_out_nodes():
    graph, backbone = separable_fixture(seed=0)
    split = sample_few_shot(graph.labels, 1, make_rng(0))
    cert = certify_rank1_prompt(graph, backbone, split=split)
    assert cert.passed and cert.accuracy >= 0.95
    assert cert.w.shape == (4, 1) and np.count_nonzero(cert.v) == 2
    with pytest.raises(ParameterError):
        certify_rank1_prompt(graph, backbone, split=SplitSpec(split.train, split.val, []))


@pytest.mark.slow
def test_one_shot_prompt_tuning_beats_head_only_on_fixture():
    graph, backbone = separable_fixture(seed=0)
    prompted, head_only = [], []
    for seed in range(10):
        cfg = dict(lr=0.001, epochs=300, shots=1, r=2, seed=seed)
        prompted.append(train(graph, backbone, TrainConfig(prompt_kind="cond_lr_gmp", **cfg)).test_acc)
        head_only.append(train(graph, backbone, TrainConfig(prompt_kind="none", **cfg)).test_acc)
    assert np.mean(prompted) >= 0.90
    assert np.mean(prompted) > np.mean(head_only)
