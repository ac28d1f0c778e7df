# lrgmp - JSON document importer
# AGPL-3.0-or-later
#
# Graph documents:
#   { "num_nodes": int, "node_features": [[float]], "edges": [[src, dst]],
#     "edge_features": [[float]]?, "edge_weights": [float]?, "labels": [int]?,
#     "directed": bool, "splits": {"train": [int], "val": [int], "test": [int]}? }
# Edges may be listed in any order; the loader canonicalizes. Undirected
# documents list each edge once and are expanded to both directions.
#
# Backbone documents:
#   { "layer_kind": "gcn"|"gin"|"mpnn", "dims": [int], "edge_dim": int?,
#     "self_loops": bool, "layers": [{"W": [[float]], "b": [float],
#     "W_self"?: ..., "W2"?: ..., "b2"?: ...}] }
#
# Data prompt documents mirror the spec union: {"kind": "node_single", "z": [...]}, ...
#
# Every schema violation raises ParseError whose message starts with the
# JSON pointer of the offending value.

import json
from pathlib import Path

import numpy as np

from lrgmp.backbone.model import BackboneSpec, LayerWeights
from lrgmp.errors import LrgmpError, ParseError
from lrgmp.graph.core import Graph, SplitSpec, from_edge_list
from lrgmp.prompt.zoo import (
    GDP_KINDS, EdgeMulti, EdgeSingle, EdgeWeightAdd, EdgeWeightMul, GdpSpec,
    Hybrid, NodeMulti, NodeSingle, Subgraph,
)


def read_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError("", f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("", f"invalid JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Typed field readers
# ---------------------------------------------------------------------------

def _obj(value, ptr: str) -> dict:
    if not isinstance(value, dict):
        raise ParseError(ptr, "expected an object")
    return value


def _field(doc: dict, key: str, ptr: str, required: bool = True):
    if key not in doc:
        if required:
            raise ParseError(f"{ptr}/{key}", "required field is missing")
        return None
    return doc[key]


def _int(value, ptr: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(ptr, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ParseError(ptr, f"expected an integer >= {minimum}, got {value}")
    return value


def _float(value, ptr: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(ptr, f"expected a number, got {value!r}")
    return float(value)


def _bool(value, ptr: str) -> bool:
    if not isinstance(value, bool):
        raise ParseError(ptr, f"expected true or false, got {value!r}")
    return value


def _list(value, ptr: str) -> list:
    if not isinstance(value, list):
        raise ParseError(ptr, "expected an array")
    return value


def _int_list(value, ptr: str) -> np.ndarray:
    return np.array([_int(v, f"{ptr}/{i}") for i, v in enumerate(_list(value, ptr))], dtype=np.int64)


def _vector(value, ptr: str) -> np.ndarray:
    return np.array([_float(v, f"{ptr}/{i}") for i, v in enumerate(_list(value, ptr))], dtype=np.float64)


def _matrix(value, ptr: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    data = _list(value, ptr)
    if rows is not None and len(data) != rows:
        raise ParseError(ptr, f"expected {rows} rows, got {len(data)}")
    out = [_vector(row, f"{ptr}/{i}") for i, row in enumerate(data)]
    width = cols if cols is not None else (len(out[0]) if out else 0)
    for i, row in enumerate(out):
        if len(row) != width:
            raise ParseError(f"{ptr}/{i}", f"expected {width} columns, got {len(row)}")
    return np.array(out, dtype=np.float64).reshape(len(out), width)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

def parse_graph(doc) -> tuple[Graph, SplitSpec | None]:
    """Graph (and optional split) from a parsed graph document."""
    doc = _obj(doc, "")
    n = _int(_field(doc, "num_nodes", ""), "/num_nodes", minimum=1)
    feats = _matrix(_field(doc, "node_features", ""), "/node_features", rows=n)
    directed = _bool(_field(doc, "directed", ""), "/directed")

    raw_edges = _list(_field(doc, "edges", ""), "/edges")
    edges = np.zeros((len(raw_edges), 2), dtype=np.int64)
    for i, pair in enumerate(raw_edges):
        pair = _list(pair, f"/edges/{i}")
        if len(pair) != 2:
            raise ParseError(f"/edges/{i}", f"expected [src, dst], got {len(pair)} entries")
        for j in range(2):
            v = _int(pair[j], f"/edges/{i}/{j}")
            if not 0 <= v < n:
                raise ParseError(f"/edges/{i}/{j}", f"node id {v} outside [0, {n})")
            edges[i, j] = v
    m = len(edges)

    edge_feat = _field(doc, "edge_features", "", required=False)
    if edge_feat is not None:
        edge_feat = _matrix(edge_feat, "/edge_features", rows=m)
    weights = _field(doc, "edge_weights", "", required=False)
    if weights is not None:
        weights = _vector(weights, "/edge_weights")
        if len(weights) != m:
            raise ParseError("/edge_weights", f"expected {m} weights, got {len(weights)}")
    labels = _field(doc, "labels", "", required=False)
    if labels is not None:
        labels = _int_list(labels, "/labels")
        if len(labels) != n:
            raise ParseError("/labels", f"expected {n} labels, got {len(labels)}")

    try:
        graph = from_edge_list(n, edges, feats, edge_feat, weights, labels, directed)
    except LrgmpError as exc:
        raise ParseError("/edges", str(exc)) from exc

    split = None
    splits = _field(doc, "splits", "", required=False)
    if splits is not None:
        splits = _obj(splits, "/splits")
        parts = {k: _int_list(_field(splits, k, "/splits"), f"/splits/{k}") for k in ("train", "val", "test")}
        try:
            split = SplitSpec(**parts).validate(n)
        except LrgmpError as exc:
            raise ParseError("/splits", str(exc)) from exc
    return graph, split


def load_graph_json(path) -> tuple[Graph, SplitSpec | None]:
    return parse_graph(read_json(path))


# ---------------------------------------------------------------------------
# Backbones
# ---------------------------------------------------------------------------

def parse_backbone(doc) -> BackboneSpec:
    doc = _obj(doc, "")
    kind = _field(doc, "layer_kind", "")
    if not isinstance(kind, str):
        raise ParseError("/layer_kind", f"expected a string, got {kind!r}")
    dims = _int_list(_field(doc, "dims", ""), "/dims")
    edge_raw = _field(doc, "edge_dim", "", required=False)
    edge_dim = 0 if edge_raw is None else _int(edge_raw, "/edge_dim", minimum=0)
    self_loops = _bool(_field(doc, "self_loops", ""), "/self_loops")
    layers = []
    for i, layer in enumerate(_list(_field(doc, "layers", ""), "/layers")):
        ptr = f"/layers/{i}"
        layer = _obj(layer, ptr)
        kw = {
            "w": _matrix(_field(layer, "W", ptr), f"{ptr}/W"),
            "b": _vector(_field(layer, "b", ptr), f"{ptr}/b"),
        }
        for key, name in (("W_self", "w_self"), ("W2", "w2")):
            if key in layer:
                kw[name] = _matrix(layer[key], f"{ptr}/{key}")
        if "b2" in layer:
            kw["b2"] = _vector(layer["b2"], f"{ptr}/b2")
        layers.append(LayerWeights(**kw))
    try:
        return BackboneSpec(kind, tuple(int(d) for d in dims), edge_dim, self_loops, tuple(layers))
    except LrgmpError as exc:
        raise ParseError("/layers", str(exc)) from exc


def load_backbone_json(path) -> BackboneSpec:
    return parse_backbone(read_json(path))


# ---------------------------------------------------------------------------
# Data prompt specs
# ---------------------------------------------------------------------------

def parse_gdp_spec(doc) -> GdpSpec:
    doc = _obj(doc, "")
    kind = _field(doc, "kind", "")
    if kind not in GDP_KINDS:
        raise ParseError("/kind", f"expected one of {sorted(GDP_KINDS)}, got {kind!r}")

    def tau() -> float:
        raw = doc.get("tau", 1.0)
        value = _float(raw, "/tau")
        if value <= 0:
            raise ParseError("/tau", f"expected tau > 0, got {value}")
        return value

    try:
        match kind:
            case "node_single":
                return NodeSingle(_vector(_field(doc, "z", ""), "/z"))
            case "node_multi":
                return NodeMulti(_matrix(_field(doc, "Z", ""), "/Z"), tau())
            case "edge_single":
                return EdgeSingle(_vector(_field(doc, "f", ""), "/f"))
            case "edge_multi":
                return EdgeMulti(_matrix(_field(doc, "F", ""), "/F"), tau())
            case "edge_weight_add":
                return EdgeWeightAdd(_vector(_field(doc, "S", ""), "/S"))
            case "edge_weight_mul":
                return EdgeWeightMul(_vector(_field(doc, "S", ""), "/S"))
            case "hybrid":
                return Hybrid(_matrix(_field(doc, "Z", ""), "/Z"), tau(), _vector(_field(doc, "S", ""), "/S"))
            case "subgraph":
                hp = _matrix(_field(doc, "Hp", ""), "/Hp")
                links = _list(_field(doc, "cross", ""), "/cross")
                nodes, prompts, weights, feats = [], [], [], []
                for i, link in enumerate(links):
                    ptr = f"/cross/{i}"
                    link = _obj(link, ptr)
                    nodes.append(_int(_field(link, "node", ptr), f"{ptr}/node", minimum=0))
                    prompts.append(_int(_field(link, "prompt", ptr), f"{ptr}/prompt", minimum=0))
                    weights.append(_float(_field(link, "weight", ptr), f"{ptr}/weight"))
                    feats.append(_vector(link.get("feat", []), f"{ptr}/feat"))
                width = len(feats[0]) if feats else 0
                for i, f in enumerate(feats):
                    if len(f) != width:
                        raise ParseError(f"/cross/{i}/feat", f"expected {width} values, got {len(f)}")
                internal = _list(doc.get("internal", []), "/internal")
                pairs, iweights = [], []
                for i, edge in enumerate(internal):
                    ptr = f"/internal/{i}"
                    edge = _obj(edge, ptr)
                    pairs.append((_int(_field(edge, "src", ptr), f"{ptr}/src", minimum=0),
                                  _int(_field(edge, "dst", ptr), f"{ptr}/dst", minimum=0)))
                    iweights.append(_float(edge.get("weight", 1.0), f"{ptr}/weight"))
                return Subgraph(
                    hp=hp,
                    link_node=np.array(nodes, dtype=np.int64),
                    link_prompt=np.array(prompts, dtype=np.int64),
                    link_weight=np.array(weights, dtype=np.float64),
                    link_feat=np.array(feats, dtype=np.float64).reshape(len(feats), width),
                    internal=np.array(pairs, dtype=np.int64).reshape(-1, 2),
                    internal_weight=np.array(iweights, dtype=np.float64),
                )
    except ParseError:
        raise
    except LrgmpError as exc:
        raise ParseError("", str(exc)) from exc
    raise ParseError("/kind", f"unhandled prompt kind {kind!r}")


def load_gdp_json(path) -> GdpSpec:
    return parse_gdp_spec(read_json(path))
