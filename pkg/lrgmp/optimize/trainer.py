# lrgmp - Prompt tuning over a frozen backbone
# AGPL-3.0-or-later
#
# Full-batch training of message prompts (or data prompt baselines, or a
# bare linear probe) plus the classifier head. The backbone never changes;
# its fingerprint is checked before and after every run.
#
# Seeding: SeedSequence(seed) spawns independent streams for the few-shot
# split and for parameter initialization.

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from lrgmp.backbone.model import (
    PROMPT_KINDS, TASKS, BackboneSpec, ForwardCache, Head,
    PromptState, accuracy, flatten_params, forward, fingerprint, init_head,
    layer_graph_for, loss_and_backward,
)
from lrgmp.config import (
    ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_EPOCHS, DEFAULT_K, DEFAULT_LR,
    DEFAULT_RANK, DEFAULT_TAU, PLACEMENTS, PROMPT_INIT_STD, SGD_MOMENTUM,
)
from lrgmp.errors import ConfigError, GraphError, ParameterError, UnsupportedSpecError
from lrgmp.graph.core import Graph, SplitSpec
from lrgmp.linalg.dense import Rng, make_rng, randn
from lrgmp.optimize.optimizers import Adam, Sgd

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")

# Data prompt kinds whose parameters do not depend on a particular graph
GRAPH_FREE_KINDS = ("none", "cond_lr_gmp", "node_single", "node_multi", "edge_single", "edge_multi")


@dataclass
class TrainConfig:
    lr: float = DEFAULT_LR
    epochs: int = DEFAULT_EPOCHS
    optimizer: str = "adam"
    momentum: float = SGD_MOMENTUM
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    seed: int = 0
    r: int = DEFAULT_RANK
    tau: float = DEFAULT_TAU
    k: int = DEFAULT_K
    shots: int = 1
    prompt_kind: str = "lr_gmp"
    placement: str | tuple = "first"
    task: str = "node"

    def validate(self) -> "TrainConfig":
        problems = []
        if not self.lr >= 0:
            problems.append(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.r < 1:
            problems.append(f"r must be >= 1, got {self.r}")
        if self.k < 1:
            problems.append(f"k must be >= 1, got {self.k}")
        if self.shots < 1:
            problems.append(f"shots must be >= 1, got {self.shots}")
        if not self.tau > 0:
            problems.append(f"tau must be > 0, got {self.tau}")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.prompt_kind not in PROMPT_KINDS:
            problems.append(f"prompt_kind must be one of {PROMPT_KINDS}, got {self.prompt_kind!r}")
        if self.task not in TASKS:
            problems.append(f"task must be one of {TASKS}, got {self.task!r}")
        if isinstance(self.placement, str) and self.placement not in PLACEMENTS:
            problems.append(f"placement must be one of {PLACEMENTS} or layer ids, got {self.placement!r}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> dict:
        doc = asdict(self)
        if not isinstance(self.placement, str):
            doc["placement"] = list(self.placement)
        return doc


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float
    test_acc: float


@dataclass
class TrainedState:
    backbone: BackboneSpec
    config: TrainConfig
    prompt: PromptState | None
    head: Head
    split: SplitSpec
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    val_acc: float = 0.0
    test_acc: float = 0.0
    backbone_fingerprint: str = ""

    def metrics(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "history": [asdict(r) for r in self.history],
        }


def resolve_placement(placement, num_layers: int) -> tuple[int, ...]:
    """first | middle (L // 2) | last | all, or an explicit collection of layer ids."""
    if isinstance(placement, str):
        match placement:
            case "first":
                return (0,)
            case "middle":
                return (num_layers // 2,)
            case "last":
                return (num_layers - 1,)
            case "all":
                return tuple(range(num_layers))
        raise ConfigError(f"unknown placement {placement!r}")
    layers = tuple(sorted(set(int(l) for l in placement)))
    if not layers or layers[0] < 0 or layers[-1] >= num_layers:
        raise ConfigError(f"placement {placement!r} must name layers in [0, {num_layers})")
    return layers


def sample_few_shot(labels, shots: int, rng: Rng) -> SplitSpec:
    """`shots` train nodes per class; each class's remainder split 1:1 into val / test.

    Nodes labelled -1 are ignored. When a remainder is odd, test gets the extra node.

    Raises
    ------
    ParameterError : a class has fewer than shots + 2 nodes
    """
    labels = np.asarray(labels, dtype=np.int64)
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    train, val, test = [], [], []
    for c in np.unique(labels[labels >= 0]):
        idx = np.flatnonzero(labels == c)
        if len(idx) < shots + 2:
            raise ParameterError(
                f"class {int(c)} has {len(idx)} nodes; {shots}-shot needs at least {shots + 2}"
            )
        perm = rng.permutation(idx)
        rest = perm[shots:]
        half = len(rest) // 2
        train.append(perm[:shots])
        val.append(rest[:half])
        test.append(rest[half:])
    if not train:
        raise ParameterError("no labelled nodes to sample a few-shot split from")
    return SplitSpec(*(np.sort(np.concatenate(part)) for part in (train, val, test)))


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def init_prompt(kind: str, backbone: BackboneSpec, graph: Graph, placement, config: TrainConfig,
                rng: Rng) -> PromptState | None:
    """Initial prompt parameters for every placement layer.

    lr_gmp U starts at zero, so the initial model equals the frozen backbone.
    """
    if kind == "none":
        return None
    lg = layer_graph_for(backbone, graph)
    n, m, d_e = lg.num_nodes, lg.num_edges, backbone.edge_dim
    std, r, k = PROMPT_INIT_STD, config.r, config.k
    state = PromptState(kind, tau=config.tau)
    if kind in ("edge_single", "edge_multi") and d_e == 0:
        raise UnsupportedSpecError(f"{kind} baseline needs edge features, graph has d_E=0")
    if kind == "subgraph":
        state.link_node = np.repeat(np.arange(n, dtype=np.int64), k)
        state.link_prompt = np.tile(np.arange(k, dtype=np.int64), n)

    for l in placement:
        d = backbone.dims[l]
        width = d + d_e
        match kind:
            case "lr_gmp":
                p = {"U": np.zeros((m, r)), "V": randn(rng, width, r, std)}
            case "cond_lr_gmp":
                p = {"W": randn(rng, width, r, std), "V": randn(rng, width, r, std)}
            case "node_single":
                p = {"z": np.zeros(d)}
            case "node_multi":
                p = {"Z": randn(rng, k, d, std)}
            case "edge_single":
                p = {"f": np.zeros(d_e)}
            case "edge_multi":
                p = {"F": randn(rng, k, d_e, std)}
            case "edge_weight_add":
                p = {"s": np.zeros(m)}
            case "edge_weight_mul":
                p = {"s": np.ones(m)}
            case "hybrid":
                p = {"Z": randn(rng, k, d, std), "s": np.ones(m)}
            case "subgraph":
                links = n * k
                p = {
                    "hp": randn(rng, k, d, std),
                    "link_weight": np.full(links, 1.0 / k),
                    "link_feat": np.zeros((links, d_e)),
                }
            case _:
                raise ConfigError(f"unknown prompt kind {kind!r}")
        state.layers[l] = p
    return state


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return Sgd(config.lr, config.momentum)
    return Adam(config.lr, config.beta1, config.beta2, config.eps)


def _num_classes(labels: np.ndarray) -> int:
    labelled = labels[labels >= 0]
    if labelled.size == 0:
        raise GraphError("graph has no labelled nodes")
    return int(labelled.max()) + 1


def _check_frozen(backbone: BackboneSpec, before: str):
    if fingerprint(backbone) != before:
        raise RuntimeError("backbone weights changed during prompt tuning")


# ---------------------------------------------------------------------------
# Node classification
# ---------------------------------------------------------------------------

def train(graph: Graph, backbone: BackboneSpec, config: TrainConfig,
          split: SplitSpec | None = None) -> TrainedState:
    """Tune prompt + head on the split's train nodes; keep the best-validation epoch.

    Metrics recorded for epoch e come from the parameters before its update.
    Validation ties keep the earlier epoch.
    """
    config.validate()
    if config.task != "node":
        raise ConfigError("train() handles task 'node'; use train_graphs() for graph tasks")
    if graph.labels is None:
        raise GraphError("node classification needs labels on the graph")
    labels = graph.labels
    split_seq, init_seq = np.random.SeedSequence(config.seed).spawn(2)
    if split is None:
        split = sample_few_shot(labels, config.shots, make_rng(split_seq))
    split.validate(graph.num_nodes)
    init_rng = make_rng(init_seq)

    before = fingerprint(backbone)
    placement = resolve_placement(config.placement, backbone.num_layers)
    if config.prompt_kind == "none":
        placement = ()
    prompt = init_prompt(config.prompt_kind, backbone, graph, placement, config, init_rng)
    head = init_head(init_rng, backbone.out_dim, _num_classes(labels), PROMPT_INIT_STD)
    params = flatten_params(prompt, head)
    opt = make_optimizer(config)

    state = TrainedState(backbone, config, prompt, head, split, backbone_fingerprint=before)
    best_val = -1.0
    for epoch in range(1, config.epochs + 1):
        logits, cache = forward(backbone, graph, prompt, head)
        loss, grads = loss_and_backward(cache, labels, split.train)
        rec = EpochRecord(
            epoch=epoch,
            loss=loss,
            train_acc=accuracy(logits, labels, split.train),
            val_acc=accuracy(logits, labels, split.val),
            test_acc=accuracy(logits, labels, split.test),
        )
        state.history.append(rec)
        if rec.val_acc > best_val:
            best_val = rec.val_acc
            state.best_epoch, state.val_acc, state.test_acc = epoch, rec.val_acc, rec.test_acc
            state.prompt = prompt.copy() if prompt is not None else None
            state.head = head.copy()
        log.debug("epoch %d loss %.6f train %.3f val %.3f test %.3f",
                  epoch, loss, rec.train_acc, rec.val_acc, rec.test_acc)
        opt.step(params, grads)

    _check_frozen(backbone, before)
    log.info("%s r=%d placement=%s: best epoch %d val %.4f test %.4f",
             config.prompt_kind, config.r, config.placement, state.best_epoch,
             state.val_acc, state.test_acc)
    return state


def evaluate(state: TrainedState, graph: Graph, idx) -> float:
    """Argmax accuracy of a trained state over node ids `idx`."""
    logits, _ = forward(state.backbone, graph, state.prompt, state.head)
    return accuracy(logits, graph.labels, idx)


# ---------------------------------------------------------------------------
# Graph classification
# ---------------------------------------------------------------------------

def train_graphs(graphs: list[Graph], graph_labels, backbone: BackboneSpec,
                 config: TrainConfig) -> TrainedState:
    """Tune one shared prompt + head over a labelled set of graphs (mean readout).

    The split is a per-class few-shot split over graph indices. Only prompt
    kinds whose parameters do not depend on one graph's edges are allowed.
    """
    config.validate()
    if config.prompt_kind not in GRAPH_FREE_KINDS:
        raise ConfigError(
            f"prompt kind {config.prompt_kind!r} is tied to one graph's edges; "
            f"graph tasks accept {GRAPH_FREE_KINDS}"
        )
    graph_labels = np.asarray(graph_labels, dtype=np.int64)
    if len(graph_labels) != len(graphs):
        raise ConfigError(f"{len(graphs)} graphs but {len(graph_labels)} labels")
    split_seq, init_seq = np.random.SeedSequence(config.seed).spawn(2)
    split = sample_few_shot(graph_labels, config.shots, make_rng(split_seq))
    init_rng = make_rng(init_seq)

    before = fingerprint(backbone)
    placement = () if config.prompt_kind == "none" else resolve_placement(config.placement, backbone.num_layers)
    prompt = init_prompt(config.prompt_kind, backbone, graphs[0], placement, config, init_rng)
    head = init_head(init_rng, backbone.out_dim, _num_classes(graph_labels), PROMPT_INIT_STD)
    params = flatten_params(prompt, head)
    opt = make_optimizer(config)

    state = TrainedState(backbone, config, prompt, head, split, backbone_fingerprint=before)
    best_val = -1.0
    for epoch in range(1, config.epochs + 1):
        logits = np.zeros((len(graphs), head.b.shape[0]))
        caches: list[ForwardCache] = []
        for i, g in enumerate(graphs):
            out, cache = forward(backbone, g, prompt, head, task="graph")
            logits[i] = out[0]
            caches.append(cache)

        total_loss = 0.0
        grads: dict[str, np.ndarray] = {}
        for i in split.train:
            loss, g_i = loss_and_backward(caches[i], graph_labels[i:i + 1], [0])
            total_loss += loss
            for name, g in g_i.items():
                grads[name] = grads[name] + g if name in grads else g.copy()
        scale = 1.0 / len(split.train)
        grads = {name: g * scale for name, g in grads.items()}

        rec = EpochRecord(
            epoch=epoch,
            loss=total_loss * scale,
            train_acc=accuracy(logits, graph_labels, split.train),
            val_acc=accuracy(logits, graph_labels, split.val),
            test_acc=accuracy(logits, graph_labels, split.test),
        )
        state.history.append(rec)
        if rec.val_acc > best_val:
            best_val = rec.val_acc
            state.best_epoch, state.val_acc, state.test_acc = epoch, rec.val_acc, rec.test_acc
            state.prompt = prompt.copy() if prompt is not None else None
            state.head = head.copy()
        opt.step(params, grads)

    _check_frozen(backbone, before)
    return state
