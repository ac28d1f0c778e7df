# lrgmp - JSON document exporter
# AGPL-3.0-or-later
#
# Inverse of io/importer.py. Floats are written through float.__repr__, the
# shortest string that parses back to the same bits, so load(save(g)) is
# bit-exact. Undirected graphs list each edge pair once (src <= dst).
# Output bytes depend only on the value being written.

import json
from pathlib import Path

import numpy as np

from lrgmp.backbone.model import BackboneSpec
from lrgmp.graph.core import Graph, SplitSpec
from lrgmp.prompt.zoo import (
    EdgeMulti, EdgeSingle, EdgeWeightAdd, EdgeWeightMul, GdpSpec, Hybrid,
    NodeMulti, NodeSingle, Subgraph,
)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_json(doc, path) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def graph_document(graph: Graph, split: SplitSpec | None = None) -> dict:
    src, dst = graph.src, graph.dst
    keep = np.ones(graph.num_edges, dtype=bool) if graph.directed else src <= dst
    doc = {
        "num_nodes": graph.num_nodes,
        "directed": bool(graph.directed),
        "node_features": graph.node_feat.tolist(),
        "edges": np.stack([src[keep], dst[keep]], axis=1).tolist(),
        "edge_weights": graph.edge_weight[keep].tolist(),
    }
    if graph.d_e:
        doc["edge_features"] = graph.edge_feat[keep].tolist()
    if graph.labels is not None:
        doc["labels"] = graph.labels.tolist()
    if split is not None:
        doc["splits"] = {
            "train": split.train.tolist(),
            "val": split.val.tolist(),
            "test": split.test.tolist(),
        }
    return doc


def save_graph_json(graph: Graph, path, split: SplitSpec | None = None) -> Path:
    return write_json(graph_document(graph, split), path)


def backbone_document(backbone: BackboneSpec) -> dict:
    layers = []
    for lw in backbone.layers:
        layer = {"W": lw.w.tolist(), "b": lw.b.tolist()}
        if lw.w_self is not None:
            layer["W_self"] = lw.w_self.tolist()
        if lw.w2 is not None:
            layer["W2"] = lw.w2.tolist()
            layer["b2"] = lw.b2.tolist()
        layers.append(layer)
    return {
        "layer_kind": backbone.layer_kind,
        "dims": list(backbone.dims),
        "edge_dim": backbone.edge_dim,
        "self_loops": bool(backbone.self_loops),
        "layers": layers,
    }


def save_backbone_json(backbone: BackboneSpec, path) -> Path:
    return write_json(backbone_document(backbone), path)


def gdp_document(spec: GdpSpec) -> dict:
    doc = {"kind": spec.kind}
    if isinstance(spec, NodeSingle):
        doc["z"] = spec.z.tolist()
    elif isinstance(spec, NodeMulti):
        doc.update(Z=spec.Z.tolist(), tau=spec.tau)
    elif isinstance(spec, EdgeSingle):
        doc["f"] = spec.f.tolist()
    elif isinstance(spec, EdgeMulti):
        doc.update(F=spec.F.tolist(), tau=spec.tau)
    elif isinstance(spec, (EdgeWeightAdd, EdgeWeightMul)):
        doc["S"] = spec.s.tolist()
    elif isinstance(spec, Hybrid):
        doc.update(Z=spec.Z.tolist(), tau=spec.tau, S=spec.s.tolist())
    elif isinstance(spec, Subgraph):
        doc["Hp"] = spec.hp.tolist()
        doc["cross"] = [
            {"node": int(v), "prompt": int(k), "weight": float(w), "feat": f.tolist()}
            for v, k, w, f in zip(spec.link_node, spec.link_prompt, spec.link_weight, spec.link_feat)
        ]
        doc["internal"] = [
            {"src": int(a), "dst": int(b), "weight": float(w)}
            for (a, b), w in zip(spec.internal, spec.internal_weight)
        ]
    return doc


def save_gdp_json(spec: GdpSpec, path) -> Path:
    return write_json(gdp_document(spec), path)
