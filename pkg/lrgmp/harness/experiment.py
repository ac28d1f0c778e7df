# lrgmp - Single experiment runs and the results CSV
# AGPL-3.0-or-later
#
# An experiment is (dataset, backbone, method, TrainConfig, noise) run once per
# seed. Dataset and backbone are given as short specs:
#
#   dataset   fixture | sbm:<b1,b2,...>[:p_in:p_out] | <graph.json>
#   backbone  fixture | init:<kind>:<d0,d1,...>     | <backbone.json>
#   noise     none | random:<p> | targeted:<budget>
#
# Everything random derives from `data_seed` (graph + initialized backbone)
# and the run seed (split, prompt init, perturbation).

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from lrgmp.backbone.model import BackboneSpec, init_backbone
from lrgmp.config import (
    CSV_HEADER_TAG, FIXTURE_P_IN, FIXTURE_P_OUT, LAYER_KINDS, RESULT_COLUMNS,
    SBM_DV, SBM_NOISE, SBM_SHIFT, SCHEMA_VERSION,
)
from lrgmp.errors import ConfigError
from lrgmp.graph.core import Graph, SplitSpec
from lrgmp.graph.generator import sbm_generate
from lrgmp.graph.perturb import random_flip, targeted_flip
from lrgmp.harness.fixture import separable_backbone, separable_graph
from lrgmp.io.exporter import write_json
from lrgmp.io.importer import load_backbone_json, load_graph_json, read_json
from lrgmp.linalg.dense import make_rng
from lrgmp.optimize.trainer import TrainConfig, sample_few_shot, train

log = logging.getLogger(__name__)

NOISE_KINDS = ("none", "random", "targeted")


@dataclass
class ExperimentConfig:
    dataset: str = "fixture"
    backbone: str = "fixture"
    method: str = "cond_lr_gmp"
    train: TrainConfig = field(default_factory=TrainConfig)
    noise: str = "none"
    seeds: list[int] = field(default_factory=lambda: [0])
    repeats: int | None = None
    data_seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if not self.seeds:
            raise ConfigError("an experiment needs at least one seed")
        if self.repeats is not None and self.repeats != len(self.seeds):
            raise ConfigError(f"repeats={self.repeats} but {len(self.seeds)} seeds given")
        parse_noise(self.noise)
        dataclasses.replace(self.train, prompt_kind=self.method).validate()
        return self

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["train"] = self.train.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {unknown}")
        kw = dict(doc)
        train_doc = kw.pop("train", {}) or {}
        if not isinstance(train_doc, dict):
            raise ConfigError(f"train must be a JSON object, got {train_doc!r}")
        train_known = {f.name for f in dataclasses.fields(TrainConfig)}
        bad = sorted(set(train_doc) - train_known)
        if bad:
            raise ConfigError(f"unknown train config keys: {bad}")
        _check_types(kw, cls, "")
        _check_types(train_doc, TrainConfig, "train.")
        if isinstance(train_doc.get("placement"), list):
            train_doc = {**train_doc, "placement": tuple(train_doc["placement"])}
        return cls(train=TrainConfig(**train_doc), **kw).validate()


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_int_list(value) -> bool:
    return isinstance(value, list) and all(_is_int(v) for v in value)


_TYPE_CHECKS = {
    int: ("an integer", _is_int),
    float: ("a number", lambda v: isinstance(v, (int, float)) and not isinstance(v, bool)),
    str: ("a string", lambda v: isinstance(v, str)),
}

# Fields whose JSON form differs from the type of their default
_SPECIAL_CHECKS = {
    "seeds": ("a list of integers", _is_int_list),
    "repeats": ("an integer or null", lambda v: v is None or _is_int(v)),
    "placement": ("a placement name or a list of layer ids",
                  lambda v: isinstance(v, str) or _is_int_list(v)),
}


def _check_types(doc: dict, cls, prefix: str):
    """JSON value types against the dataclass defaults; raises ConfigError naming the field."""
    for f in dataclasses.fields(cls):
        if f.name not in doc or f.name == "train":
            continue
        what, check = _SPECIAL_CHECKS.get(f.name) or _TYPE_CHECKS[type(f.default)]
        if not check(doc[f.name]):
            raise ConfigError(f"{prefix}{f.name} must be {what}, got {doc[f.name]!r}")


def load_experiment_json(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(read_json(path))


@dataclass
class ResultRow:
    method: str
    dataset: str
    seed: int
    r: int
    placement: str
    shots: int
    noise: str
    val_acc: float
    test_acc: float
    epochs_to_best: int
    wall_time_ms: int = 0

    def as_record(self) -> dict:
        return {c: getattr(self, c) for c in RESULT_COLUMNS}


# ---------------------------------------------------------------------------
# Spec resolution
# ---------------------------------------------------------------------------

def parse_noise(noise: str) -> tuple[str, float]:
    """'none' | 'random:p' | 'targeted:b' -> (kind, amount)."""
    kind, _, amount = noise.partition(":")
    if kind not in NOISE_KINDS:
        raise ConfigError(f"noise must be one of none, random:<p>, targeted:<b>; got {noise!r}")
    if kind == "none":
        if amount:
            raise ConfigError(f"noise 'none' takes no amount, got {noise!r}")
        return kind, 0.0
    try:
        value = float(amount)
    except ValueError:
        raise ConfigError(f"noise amount in {noise!r} is not a number") from None
    if kind == "random" and not 0.0 <= value <= 1.0:
        raise ConfigError(f"random noise p must be in [0, 1], got {value}")
    if kind == "targeted" and (value < 0 or value != int(value)):
        raise ConfigError(f"targeted noise budget must be a non-negative integer, got {amount}")
    return kind, value


def _int_tuple(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated integers, got {text!r}") from None


def _number(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{what} must be a number, got {text!r}") from None


def resolve_dataset(spec: str, data_seed: int) -> tuple[Graph, SplitSpec | None]:
    if spec == "fixture":
        return separable_graph(data_seed), None
    if spec.startswith("sbm:"):
        parts = spec.split(":")[1:]
        if len(parts) not in (1, 3):
            raise ConfigError(f"sbm dataset is sbm:<blocks>[:p_in:p_out], got {spec!r}")
        blocks = _int_tuple(parts[0], "sbm block sizes")
        p_in, p_out = FIXTURE_P_IN, FIXTURE_P_OUT
        if len(parts) == 3:
            p_in, p_out = _number(parts[1], "sbm p_in"), _number(parts[2], "sbm p_out")
        graph = sbm_generate(make_rng(data_seed), blocks, p_in, p_out, SBM_DV, SBM_SHIFT, SBM_NOISE)
        return graph, None
    return load_graph_json(spec)


def resolve_backbone(spec: str, graph: Graph, data_seed: int) -> BackboneSpec:
    if spec == "fixture":
        return separable_backbone()
    if spec.startswith("init:"):
        parts = spec.split(":")
        if len(parts) != 3 or parts[1] not in LAYER_KINDS:
            raise ConfigError(f"backbone init spec is init:<{'|'.join(LAYER_KINDS)}>:<dims>, got {spec!r}")
        dims = _int_tuple(parts[2], "backbone dims")
        if dims[0] != graph.d_v:
            raise ConfigError(f"backbone input width {dims[0]} does not match node features d_V={graph.d_v}")
        rng = make_rng(np.random.SeedSequence([data_seed, 1]))
        return init_backbone(parts[1], dims, graph.d_e, True, rng)
    return load_backbone_json(spec)


def apply_noise(graph: Graph, noise: str, split: SplitSpec, rng) -> Graph:
    """Perturb the structure; targeted noise hits every test node in ascending order."""
    kind, amount = parse_noise(noise)
    if kind == "random":
        return random_flip(graph, amount, rng)
    if kind == "targeted":
        budget = int(amount)
        for target in split.test:
            graph = targeted_flip(graph, int(target), budget, rng)
    return graph


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def placement_label(placement) -> str:
    return placement if isinstance(placement, str) else "+".join(str(l) for l in placement)


def run_experiment(config: ExperimentConfig, seed: int, timing: bool = False) -> tuple[ResultRow, dict]:
    """One seed of an experiment. Returns the CSV row and the metrics document."""
    tc = dataclasses.replace(config.train, seed=seed, prompt_kind=config.method).validate()
    graph, split = resolve_dataset(config.dataset, config.data_seed)
    backbone = resolve_backbone(config.backbone, graph, config.data_seed)

    # 1. Few-shot split on the clean labels, same stream the trainer would use
    split_seq, _, noise_seq = np.random.SeedSequence(seed).spawn(3)
    if split is None:
        split = sample_few_shot(graph.labels, tc.shots, make_rng(split_seq))

    # 2. Structural noise
    graph = apply_noise(graph, config.noise, split, make_rng(noise_seq))

    # 3. Train
    start = time.perf_counter()
    state = train(graph, backbone, tc, split)
    elapsed = int(round((time.perf_counter() - start) * 1000)) if timing else 0

    row = ResultRow(
        method=config.method,
        dataset=config.dataset,
        seed=seed,
        r=tc.r,
        placement=placement_label(tc.placement),
        shots=tc.shots,
        noise=config.noise,
        val_acc=state.val_acc,
        test_acc=state.test_acc,
        epochs_to_best=state.best_epoch,
        wall_time_ms=elapsed,
    )
    metrics = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.to_dict(),
        "seed": seed,
        "result": row.as_record(),
        "backbone_fingerprint": state.backbone_fingerprint,
        "train": state.metrics(),
    }
    return row, metrics


def write_metrics(metrics, path) -> Path:
    return write_json(metrics, path)


# ---------------------------------------------------------------------------
# Results CSV
# ---------------------------------------------------------------------------

def append_results_csv(rows: list[ResultRow], path) -> Path:
    """Append rows; a new file starts with the schema tag and the column header.

    Raises
    ------
    ConfigError : existing file carries a different tag or column header
    """
    path = Path(path)
    header = ",".join(RESULT_COLUMNS)
    fresh = not path.exists() or path.stat().st_size == 0
    if not fresh:
        with path.open(encoding="utf-8") as fh:
            existing = [fh.readline().rstrip("\n"), fh.readline().rstrip("\n")]
        if existing != [CSV_HEADER_TAG, header]:
            raise ConfigError(f"{path}: results header does not match {CSV_HEADER_TAG} / {header}")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([r.as_record() for r in rows], columns=list(RESULT_COLUMNS))
    with path.open("a", encoding="utf-8", newline="") as fh:
        if fresh:
            fh.write(CSV_HEADER_TAG + "\n")
        frame.to_csv(fh, header=fresh, index=False, lineterminator="\n")
    return path
