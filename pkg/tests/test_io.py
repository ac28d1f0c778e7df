import json

import numpy as np
import pytest

from lrgmp.backbone.model import init_backbone
from lrgmp.errors import ParseError
from lrgmp.io.exporter import (
    backbone_document, dumps, gdp_document, graph_document, save_gdp_json, save_graph_json,
)
from lrgmp.io.importer import (
    load_gdp_json, load_graph_json, parse_backbone, parse_gdp_spec, parse_graph,
)
from lrgmp.linalg.dense import make_rng
from lrgmp.prompt.zoo import Hybrid, NodeMulti, Subgraph


def _doc(fixtures_dir):
    return json.loads((fixtures_dir / "small_graph.json").read_text())


def test_fixture_loads(small_graph, small_split):
    assert small_graph.num_nodes == 4
    assert small_graph.num_edges == 5
    assert (small_graph.d_v, small_graph.d_e) == (2, 1)
    assert small_graph.labels.tolist() == [0, 1, 0, 1]
    assert small_split.test.tolist() == [3]


def test_saved_graph_reloads_identically(small_graph, small_split, tmp_path):
    path = save_graph_json(small_graph, tmp_path / "g.json", small_split)
    graph, split = load_graph_json(path)
    assert graph.same_as(small_graph)
    assert split.train.tolist() == [0, 1]


def test_undirected_graph_lists_each_pair_once(path_graph):
    doc = graph_document(path_graph)
    assert doc["edges"] == [[0, 1], [1, 2]]
    graph, _ = parse_graph(doc)
    assert graph.same_as(path_graph)


def test_dumps_is_stable(small_graph):
    a = dumps(graph_document(small_graph))
    b = dumps(graph_document(small_graph))
    assert a == b and a.endswith("\n")


@pytest.mark.parametrize("mutate, pointer", [
    (lambda d: d.pop("directed"), "/directed"),
    (lambda d: d["edges"][1].__setitem__(1, 7), "/edges/1/1"),
    (lambda d: d["node_features"].pop(), "/node_features"),
    (lambda d: d["edge_weights"].append(1.0), "/edge_weights"),
    (lambda d: d["labels"].__setitem__(0, "a"), "/labels/0"),
    (lambda d: d["splits"].__setitem__("val", [0]), "/splits"),
])
def test_parse_errors_carry_pointer(fixtures_dir, mutate, pointer):
    doc = _doc(fixtures_dir)
    mutate(doc)
    with pytest.raises(ParseError) as err:
        parse_graph(doc)
    assert str(err.value).startswith(pointer + ":")


def test_duplicate_edge_in_document(fixtures_dir):
    doc = _doc(fixtures_dir)
    doc["edges"][1] = [0, 1]
    with pytest.raises(ParseError, match="^/edges: duplicate"):
        parse_graph(doc)


def test_backbone_document_parses_back():
    backbone = init_backbone("gin", (2, 3, 2), 1, True, make_rng(0))
    parsed = parse_backbone(backbone_document(backbone))
    assert parsed.layer_kind == "gin" and parsed.dims == (2, 3, 2)
    for a, b in zip(backbone.layers, parsed.layers):
        np.testing.assert_array_equal(a.w, b.w)
        np.testing.assert_array_equal(a.w2, b.w2)


def test_backbone_wrong_shape_is_parse_error():
    doc = backbone_document(init_backbone("gcn", (2, 2), 0, False, make_rng(0)))
    doc["layers"][0]["W"] = [[1.0, 2.0]]
    with pytest.raises(ParseError, match="^/layers"):
        parse_backbone(doc)


def test_gdp_documents_parse_back():
    spec = NodeMulti(np.array([[1.0, 2.0]]), tau=0.5)
    parsed = parse_gdp_spec(gdp_document(spec))
    assert isinstance(parsed, NodeMulti) and parsed.tau == 0.5
    np.testing.assert_array_equal(parsed.Z, spec.Z)

    sub = Subgraph(np.ones((2, 2)), [0, 3], [1, 0], [0.5, 2.0], [[1.0], [2.0]],
                   internal=[[0, 1]], internal_weight=[1.5])
    parsed = parse_gdp_spec(gdp_document(sub))
    assert parsed.link_node.tolist() == [0, 3]
    assert parsed.internal.tolist() == [[0, 1]]


def test_gdp_file_keeps_hybrid_parameters(tmp_path):
    spec = Hybrid(np.array([[0.5, -1.0], [2.0, 0.0]]), 0.25, np.array([1.0, 0.5, 2.0]))
    loaded = load_gdp_json(save_gdp_json(spec, tmp_path / "hybrid.json"))
    assert isinstance(loaded, Hybrid) and loaded.tau == 0.25
    np.testing.assert_array_equal(loaded.Z, spec.Z)
    np.testing.assert_array_equal(loaded.s, spec.s)


def test_gdp_unknown_kind():
    with pytest.raises(ParseError, match="^/kind"):
        parse_gdp_spec({"kind": "mystery"})
