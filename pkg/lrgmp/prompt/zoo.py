# lrgmp - Graph data prompt families
# AGPL-3.0-or-later
#
# Each family modifies one graph component before message passing:
#
#   node_single      H~ = H + 1 z^T
#   node_multi       H~ = H + softmax(H Z^T / tau) Z
#   edge_single      E~ = E + 1 f^T
#   edge_multi       E~ = E + softmax(E F^T / tau) F
#   edge_weight_add  A~ = A + S        (S on existing edges only)
#   edge_weight_mul  A~ = A * S
#   subgraph         union with K prompt nodes, cross links (v <- k)
#   hybrid           node_multi on features, then edge_weight_mul
#
# Assignment matrices are always computed from the unprompted inputs.

from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np

from lrgmp.config import DEFAULT_TAU
from lrgmp.errors import GraphError, ParameterError, ShapeError, UnsupportedSpecError
from lrgmp.graph.core import Graph, from_arrays, reverse_edge_index
from lrgmp.linalg.dense import Mat, as_mat, as_vec, row_softmax


def _check_tau(tau: float):
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau}")


def _check_basis(Z: Mat, name: str):
    if Z.shape[0] < 1:
        raise ParameterError(f"{name} needs at least one basis row (k >= 1)")


@dataclass(frozen=True, eq=False)
class NodeSingle:
    kind: ClassVar[str] = "node_single"
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", as_vec(self.z, "z"))


@dataclass(frozen=True, eq=False)
class NodeMulti:
    kind: ClassVar[str] = "node_multi"
    Z: Mat
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        object.__setattr__(self, "Z", as_mat(self.Z, "Z"))
        _check_basis(self.Z, "Z")
        _check_tau(self.tau)


@dataclass(frozen=True, eq=False)
class EdgeSingle:
    kind: ClassVar[str] = "edge_single"
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", as_vec(self.f, "f"))


@dataclass(frozen=True, eq=False)
class EdgeMulti:
    kind: ClassVar[str] = "edge_multi"
    F: Mat
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        object.__setattr__(self, "F", as_mat(self.F, "F"))
        _check_basis(self.F, "F")
        _check_tau(self.tau)


@dataclass(frozen=True, eq=False)
class EdgeWeightAdd:
    kind: ClassVar[str] = "edge_weight_add"
    s: np.ndarray           # (|E|,) aligned to canonical edge order

    def __post_init__(self):
        object.__setattr__(self, "s", as_vec(self.s, "s"))


@dataclass(frozen=True, eq=False)
class EdgeWeightMul:
    kind: ClassVar[str] = "edge_weight_mul"
    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", as_vec(self.s, "s"))


@dataclass(frozen=True, eq=False)
class Subgraph:
    """Prompt graph of K nodes joined to the input graph by cross links.

    Link i is a directed edge from prompt node ``link_prompt[i]`` into original
    node ``link_node[i]`` with weight A^p and edge features E^p. Internal
    edges among prompt nodes are kept in the union graph with zero edge
    features; they never reach original nodes within one layer.
    """

    kind: ClassVar[str] = "subgraph"
    hp: Mat                             # (K, d_V)
    link_node: np.ndarray               # (L,) original node v
    link_prompt: np.ndarray             # (L,) prompt node k
    link_weight: np.ndarray             # (L,) A^p_vk
    link_feat: Mat                      # (L, d_E) E^p_vk
    internal: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    internal_weight: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "hp", as_mat(self.hp, "hp"))
        object.__setattr__(self, "link_node", np.asarray(self.link_node, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "link_prompt", np.asarray(self.link_prompt, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "link_weight", as_vec(np.reshape(self.link_weight, -1), "link_weight"))
        feat = np.asarray(self.link_feat, dtype=np.float64)
        if feat.ndim == 1 and feat.size == 0:
            feat = feat.reshape(len(self.link_node), 0)
        object.__setattr__(self, "link_feat", as_mat(feat, "link_feat"))
        object.__setattr__(self, "internal", np.asarray(self.internal, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "internal_weight", as_vec(np.reshape(self.internal_weight, -1), "internal_weight"))
        n_links = len(self.link_node)
        if not (len(self.link_prompt) == len(self.link_weight) == self.link_feat.shape[0] == n_links):
            raise ShapeError("subgraph link arrays must all have one entry per cross link")
        if len(self.internal_weight) != len(self.internal):
            raise ShapeError("subgraph internal_weight must have one entry per internal edge")
        K = self.num_prompt_nodes
        if n_links and (self.link_prompt.min() < 0 or self.link_prompt.max() >= K):
            raise GraphError(f"cross link prompt node id outside [0, {K})")
        if len(self.internal) and (self.internal.min() < 0 or self.internal.max() >= K):
            raise GraphError(f"internal prompt edge id outside [0, {K})")

    @property
    def num_prompt_nodes(self) -> int:
        return self.hp.shape[0]


@dataclass(frozen=True, eq=False)
class Hybrid:
    kind: ClassVar[str] = "hybrid"
    Z: Mat
    tau: float
    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Z", as_mat(self.Z, "Z"))
        object.__setattr__(self, "s", as_vec(self.s, "s"))
        _check_basis(self.Z, "Z")
        _check_tau(self.tau)


GdpSpec = NodeSingle | NodeMulti | EdgeSingle | EdgeMulti | EdgeWeightAdd | EdgeWeightMul | Subgraph | Hybrid

GDP_KINDS: dict[str, type] = {
    cls.kind: cls
    for cls in (NodeSingle, NodeMulti, EdgeSingle, EdgeMulti,
                EdgeWeightAdd, EdgeWeightMul, Subgraph, Hybrid)
}


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------

def assignment(X: Mat, B: Mat, tau: float = DEFAULT_TAU) -> Mat:
    """Soft assignment of X's rows to basis rows B: softmax(X B^T / tau)."""
    if X.shape[1] != B.shape[1]:
        raise ShapeError(f"assignment: X {X.shape} and basis {B.shape} differ in width")
    return row_softmax(X @ B.T, tau)


def apply_node_prompt(graph: Graph, spec: NodeSingle | NodeMulti) -> Graph:
    H = graph.node_feat
    if isinstance(spec, NodeSingle):
        if spec.z.shape[0] != graph.d_v:
            raise ShapeError(f"z has length {spec.z.shape[0]}, node features have d_V={graph.d_v}")
        return graph.with_node_feat(H + spec.z[None, :])
    if spec.Z.shape[1] != graph.d_v:
        raise ShapeError(f"Z has width {spec.Z.shape[1]}, node features have d_V={graph.d_v}")
    return graph.with_node_feat(H + assignment(H, spec.Z, spec.tau) @ spec.Z)


def apply_edge_feature_prompt(graph: Graph, spec: EdgeSingle | EdgeMulti) -> Graph:
    if graph.d_e == 0:
        raise UnsupportedSpecError(f"{spec.kind} prompt needs edge features, graph has d_E=0")
    E = graph.edge_feat
    basis = spec.f if isinstance(spec, EdgeSingle) else spec.F
    if basis.shape[-1] != graph.d_e:
        raise ShapeError(f"{spec.kind} prompt width {basis.shape[-1]} != d_E={graph.d_e}")
    if isinstance(spec, EdgeSingle):
        return replace(graph, edge_feat=E + spec.f[None, :])
    return replace(graph, edge_feat=E + assignment(E, spec.F, spec.tau) @ spec.F)


def _with_weights(graph: Graph, weight: np.ndarray) -> Graph:
    # Per-edge prompts may break pair symmetry; such results are directed.
    directed = graph.directed
    if not directed and graph.num_edges:
        directed = not np.array_equal(weight, weight[reverse_edge_index(graph)])
    return replace(graph, edge_weight=weight, directed=directed)


def apply_edge_weight_prompt(graph: Graph, spec: EdgeWeightAdd | EdgeWeightMul) -> Graph:
    if spec.s.shape[0] != graph.num_edges:
        raise ShapeError(f"S has {spec.s.shape[0]} entries, graph has {graph.num_edges} edges")
    A = graph.edge_weight
    return _with_weights(graph, A + spec.s if isinstance(spec, EdgeWeightAdd) else A * spec.s)


def apply_subgraph_prompt(graph: Graph, spec: Subgraph) -> Graph:
    """Union of the graph and the prompt graph, prompt nodes numbered N..N+K-1."""
    K = spec.num_prompt_nodes
    if K == 0:
        return graph
    n = graph.num_nodes
    if spec.hp.shape[1] != graph.d_v:
        raise ShapeError(f"prompt node features have width {spec.hp.shape[1]}, d_V={graph.d_v}")
    if spec.link_feat.shape[1] != graph.d_e:
        raise ShapeError(f"cross link features have width {spec.link_feat.shape[1]}, d_E={graph.d_e}")
    if len(spec.link_node) and (spec.link_node.min() < 0 or spec.link_node.max() >= n):
        raise GraphError(f"cross link node id outside [0, {n})")

    n_int = len(spec.internal)
    labels = None
    if graph.labels is not None:
        labels = np.concatenate([graph.labels, np.full(K, -1, dtype=np.int64)])
    return from_arrays(
        n + K,
        np.concatenate([graph.src, n + spec.link_prompt, n + spec.internal[:, 0]]),
        np.concatenate([graph.dst, spec.link_node, n + spec.internal[:, 1]]),
        np.vstack([graph.node_feat, spec.hp]),
        np.vstack([graph.edge_feat, spec.link_feat, np.zeros((n_int, graph.d_e))]),
        np.concatenate([graph.edge_weight, spec.link_weight, spec.internal_weight]),
        labels,
        directed=True,
    )


def apply_hybrid_prompt(graph: Graph, spec: Hybrid) -> Graph:
    prompted = apply_node_prompt(graph, NodeMulti(spec.Z, spec.tau))
    return apply_edge_weight_prompt(prompted, EdgeWeightMul(spec.s))


def apply_gdp(graph: Graph, spec: GdpSpec) -> Graph:
    """Apply any graph data prompt family."""
    if isinstance(spec, (NodeSingle, NodeMulti)):
        return apply_node_prompt(graph, spec)
    if isinstance(spec, (EdgeSingle, EdgeMulti)):
        return apply_edge_feature_prompt(graph, spec)
    if isinstance(spec, (EdgeWeightAdd, EdgeWeightMul)):
        return apply_edge_weight_prompt(graph, spec)
    if isinstance(spec, Subgraph):
        return apply_subgraph_prompt(graph, spec)
    if isinstance(spec, Hybrid):
        return apply_hybrid_prompt(graph, spec)
    raise UnsupportedSpecError(f"unknown prompt spec {spec!r}")
