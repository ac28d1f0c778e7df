# lrgmp - Graph message prompts
# AGPL-3.0-or-later
#
# A message prompt P is an offset on the message matrix: M~ = M + P.
# Low-rank form P = U V^T; conditional form U = M W.
#
# gdp_to_gmp builds, for each graph data prompt family, the message prompt
# whose effect under ConcatMPNN messages equals applying the data prompt to
# the graph (exactly at message level; at sum-aggregation level for the
# subgraph family). gdp_prompt_backward is its vector-Jacobian product, used
# to train data-prompt baselines in message space.

import logging
from dataclasses import dataclass

import numpy as np

from lrgmp.errors import ParameterError, ShapeError, UnsupportedSpecError
from lrgmp.graph.core import Graph
from lrgmp.linalg.dense import Mat, as_mat
from lrgmp.message.engine import MessageMatrix
from lrgmp.message.kernels import scatter_rows
from lrgmp.prompt.zoo import (
    EdgeMulti, EdgeSingle, EdgeWeightAdd, EdgeWeightMul, GdpSpec, Hybrid,
    NodeMulti, NodeSingle, Subgraph, assignment,
)

log = logging.getLogger(__name__)

MUTANTS = ("drop-mask",)


@dataclass(frozen=True, eq=False)
class MessagePrompt:
    mat: Mat                            # (|E|, d_V + d_E)
    aggregation_level: bool = False     # equivalence holds only after sum aggregation
    uncovered: tuple[int, ...] = ()     # nodes whose prompt effect has no edge to ride on


@dataclass(frozen=True, eq=False)
class LowRankPrompt:
    u: Mat      # (|E|, r)
    v: Mat      # (d_V + d_E, r)

    def __post_init__(self):
        object.__setattr__(self, "u", as_mat(self.u, "U"))
        object.__setattr__(self, "v", as_mat(self.v, "V"))
        if self.u.shape[1] != self.v.shape[1] or self.u.shape[1] < 1:
            raise ShapeError(f"U {self.u.shape} and V {self.v.shape} must share rank r >= 1")

    @property
    def r(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True, eq=False)
class ConditionalPrompt:
    w: Mat      # (d_V + d_E, r)
    v: Mat      # (d_V + d_E, r)

    def __post_init__(self):
        object.__setattr__(self, "w", as_mat(self.w, "W"))
        object.__setattr__(self, "v", as_mat(self.v, "V"))
        if self.w.shape != self.v.shape or self.w.shape[1] < 1:
            raise ShapeError(f"W {self.w.shape} and V {self.v.shape} must have equal shapes, r >= 1")

    @property
    def r(self) -> int:
        return self.w.shape[1]


def apply_gmp(M: MessageMatrix, P: MessagePrompt, mode: str = "add") -> MessageMatrix:
    """M + P (default) or the element-wise M * P."""
    if P.mat.shape != M.mat.shape:
        raise ShapeError(f"prompt {P.mat.shape} does not match messages {M.mat.shape}")
    if mode == "add":
        mat = M.mat + P.mat
    elif mode == "mul":
        mat = M.mat * P.mat
    else:
        raise ParameterError(f"prompt mode must be 'add' or 'mul', got {mode!r}")
    return MessageMatrix(mat, M.d_v_span, M.d_e_span)


def lr_expand(p: LowRankPrompt) -> MessagePrompt:
    return MessagePrompt(p.u @ p.v.T)


def conditional_u(M: MessageMatrix, c: ConditionalPrompt) -> Mat:
    """U = M W: a linear projection of each message row."""
    if c.w.shape[0] != M.width:
        raise ShapeError(f"W has {c.w.shape[0]} rows, messages have width {M.width}")
    return M.mat @ c.w


def conditional_expand(M: MessageMatrix, c: ConditionalPrompt) -> MessagePrompt:
    return MessagePrompt(conditional_u(M, c) @ c.v.T)


# ---------------------------------------------------------------------------
# Data prompt -> message prompt
# ---------------------------------------------------------------------------

def _inputs(graph: Graph, H: Mat, coef: np.ndarray | None):
    H = as_mat(H, "H")
    if H.shape[0] != graph.num_nodes:
        raise ShapeError(f"H has {H.shape[0]} rows, graph has {graph.num_nodes} nodes")
    A = graph.edge_weight if coef is None else np.asarray(coef, dtype=np.float64)
    if A.shape != (graph.num_edges,):
        raise ShapeError(f"edge coefficients {A.shape} do not match {graph.num_edges} edges")
    return H, A


def _edge_rows(graph: Graph, H: Mat) -> Mat:
    """[H_u || E_vu] per edge."""
    return np.hstack([H[graph.src], graph.edge_feat])


def _require_edge_features(graph: Graph, spec):
    if graph.d_e == 0:
        raise UnsupportedSpecError(f"{spec.kind} prompt needs edge features, graph has d_E=0")


def gdp_to_gmp(graph: Graph, H: Mat, spec: GdpSpec, coef: np.ndarray | None = None,
               mutant: str | None = None) -> MessagePrompt:
    """Message prompt equivalent to applying `spec` to the graph.

    Parameters
    ----------
    graph  : graph the messages are aligned to
    H      : node features feeding the messages (graph.node_feat for the plain case)
    spec   : data prompt
    coef   : per-edge coefficient used in place of A_vu (e.g. Â at a GCN layer)
    mutant : "drop-mask" omits the A_vu factor (a deliberately wrong translator)

    Returns
    -------
    MessagePrompt aligned to canonical edge order. For Subgraph the prompt is
    aggregation-level and lists original nodes with cross links but no
    incoming edges as uncovered.
    """
    if mutant is not None and mutant not in MUTANTS:
        raise ParameterError(f"unknown translator mutant {mutant!r}")
    H, A = _inputs(graph, H, coef)
    if mutant == "drop-mask":
        A = np.ones_like(A)
    d_v, d_e = H.shape[1], graph.d_e
    src = graph.src
    P = np.zeros((graph.num_edges, d_v + d_e))

    if isinstance(spec, NodeSingle):
        P[:, :d_v] = A[:, None] * spec.z[None, :]
    elif isinstance(spec, NodeMulti):
        Zu = assignment(H, spec.Z, spec.tau) @ spec.Z
        P[:, :d_v] = A[:, None] * Zu[src]
    elif isinstance(spec, EdgeSingle):
        _require_edge_features(graph, spec)
        P[:, d_v:] = A[:, None] * spec.f[None, :]
    elif isinstance(spec, EdgeMulti):
        _require_edge_features(graph, spec)
        Fe = assignment(graph.edge_feat, spec.F, spec.tau) @ spec.F
        P[:, d_v:] = A[:, None] * Fe
    elif isinstance(spec, EdgeWeightAdd):
        _check_len(spec.s, graph)
        P[:] = spec.s[:, None] * _edge_rows(graph, H)
    elif isinstance(spec, EdgeWeightMul):
        _check_len(spec.s, graph)
        P[:] = (A * spec.s - A)[:, None] * _edge_rows(graph, H)
    elif isinstance(spec, Hybrid):
        _check_len(spec.s, graph)
        Zu = assignment(H, spec.Z, spec.tau) @ spec.Z
        P[:] = (A * (spec.s - 1.0))[:, None] * _edge_rows(graph, H)
        P[:, :d_v] += (A * spec.s)[:, None] * Zu[src]
    elif isinstance(spec, Subgraph):
        return _subgraph_prompt(graph, H, spec, P)
    else:
        raise UnsupportedSpecError(f"unknown prompt spec {spec!r}")
    return MessagePrompt(P)


def _check_len(s: np.ndarray, graph: Graph):
    if s.shape[0] != graph.num_edges:
        raise ShapeError(f"S has {s.shape[0]} entries, graph has {graph.num_edges} edges")


def _subgraph_rows(graph: Graph, spec: Subgraph) -> tuple[Mat, np.ndarray]:
    """Per-node contribution (1/|N_v|) sum_k A^p_vk [Hp_k || E^p_vk] and |N_v|."""
    n = graph.num_nodes
    if spec.link_feat.shape[1] != graph.d_e:
        raise ShapeError(f"cross link features have width {spec.link_feat.shape[1]}, d_E={graph.d_e}")
    link_rows = spec.link_weight[:, None] * np.hstack([spec.hp[spec.link_prompt], spec.link_feat])
    total = scatter_rows(link_rows, spec.link_node, n)
    deg = graph.in_degree()
    contrib = np.zeros_like(total)
    nz = deg > 0
    contrib[nz] = total[nz] / deg[nz, None]
    return contrib, deg


def _subgraph_prompt(graph: Graph, H: Mat, spec: Subgraph, P: Mat) -> MessagePrompt:
    if spec.hp.shape[1] != H.shape[1]:
        raise ShapeError(f"prompt node features have width {spec.hp.shape[1]}, H has {H.shape[1]}")
    n = graph.num_nodes
    if len(spec.link_node) and (spec.link_node.min() < 0 or spec.link_node.max() >= n):
        raise ShapeError(f"cross link node id outside [0, {n})")
    contrib, deg = _subgraph_rows(graph, spec)
    P[:] = contrib[graph.dst]
    linked = np.zeros(n, dtype=bool)
    linked[spec.link_node] = True
    uncovered = tuple(int(v) for v in np.flatnonzero(linked & (deg == 0)))
    if uncovered:
        log.warning("subgraph prompt: nodes %s have cross links but no incoming edges; "
                    "their prompt effect cannot be expressed on messages", list(uncovered))
    return MessagePrompt(P, aggregation_level=True, uncovered=uncovered)


# ---------------------------------------------------------------------------
# Vector-Jacobian product of gdp_to_gmp
# ---------------------------------------------------------------------------

# Trainable fields per family, in the order gdp_prompt_backward reports them
TRAINABLE_FIELDS: dict[str, tuple[str, ...]] = {
    "node_single":     ("z",),
    "node_multi":      ("Z",),
    "edge_single":     ("f",),
    "edge_multi":      ("F",),
    "edge_weight_add": ("s",),
    "edge_weight_mul": ("s",),
    "hybrid":          ("Z", "s"),
    "subgraph":        ("hp", "link_weight", "link_feat"),
}


def _softmax_basis_vjp(X: Mat, B: Mat, tau: float, d_out: Mat) -> tuple[Mat, Mat]:
    """Gradients of out = softmax(X B^T / tau) B w.r.t. (X, B)."""
    alpha = assignment(X, B, tau)
    d_alpha = d_out @ B.T
    d_logits = alpha * (d_alpha - np.sum(d_alpha * alpha, axis=1, keepdims=True))
    dB = alpha.T @ d_out + d_logits.T @ X / tau
    dX = d_logits @ B / tau
    return dX, dB


def gdp_prompt_backward(graph: Graph, H: Mat, spec: GdpSpec, dP: Mat,
                        coef: np.ndarray | None = None) -> tuple[dict[str, np.ndarray], Mat]:
    """Gradients of a scalar loss through gdp_to_gmp.

    Returns
    -------
    (param_grads, dH) : param_grads keyed by TRAINABLE_FIELDS[spec.kind];
                        dH is the gradient w.r.t. the node features H.
    """
    H, A = _inputs(graph, H, coef)
    d_v = H.shape[1]
    src, n = graph.src, graph.num_nodes
    dH = np.zeros_like(H)

    if isinstance(spec, NodeSingle):
        return {"z": A @ dP[:, :d_v]}, dH
    if isinstance(spec, NodeMulti):
        dZu = scatter_rows(A[:, None] * dP[:, :d_v], src, n)
        dH, dZ = _softmax_basis_vjp(H, spec.Z, spec.tau, dZu)
        return {"Z": dZ}, dH
    if isinstance(spec, EdgeSingle):
        return {"f": A @ dP[:, d_v:]}, dH
    if isinstance(spec, EdgeMulti):
        _, dF = _softmax_basis_vjp(graph.edge_feat, spec.F, spec.tau, A[:, None] * dP[:, d_v:])
        return {"F": dF}, dH
    if isinstance(spec, EdgeWeightAdd):
        rows = _edge_rows(graph, H)
        dH = scatter_rows(spec.s[:, None] * dP[:, :d_v], src, n)
        return {"s": np.sum(dP * rows, axis=1)}, dH
    if isinstance(spec, EdgeWeightMul):
        rows = _edge_rows(graph, H)
        dH = scatter_rows((A * spec.s - A)[:, None] * dP[:, :d_v], src, n)
        return {"s": A * np.sum(dP * rows, axis=1)}, dH
    if isinstance(spec, Hybrid):
        rows = _edge_rows(graph, H)
        Zu = assignment(H, spec.Z, spec.tau) @ spec.Z
        rows[:, :d_v] += Zu[src]
        ds = A * np.sum(dP * rows, axis=1)
        dH = scatter_rows((A * (spec.s - 1.0))[:, None] * dP[:, :d_v], src, n)
        dZu = scatter_rows((A * spec.s)[:, None] * dP[:, :d_v], src, n)
        dH_assign, dZ = _softmax_basis_vjp(H, spec.Z, spec.tau, dZu)
        return {"Z": dZ, "s": ds}, dH + dH_assign
    if isinstance(spec, Subgraph):
        deg = graph.in_degree()
        d_contrib = scatter_rows(dP, graph.dst, n)
        scale = np.zeros(n)
        scale[deg > 0] = 1.0 / deg[deg > 0]
        g = d_contrib[spec.link_node] * scale[spec.link_node, None]      # (L, d_V + d_E)
        rows = np.hstack([spec.hp[spec.link_prompt], spec.link_feat])
        w = spec.link_weight[:, None]
        d_hp = scatter_rows(w * g[:, :d_v], spec.link_prompt, spec.num_prompt_nodes)
        return {
            "hp": d_hp,
            "link_weight": np.sum(g * rows, axis=1),
            "link_feat": w * g[:, d_v:],
        }, dH
    raise UnsupportedSpecError(f"unknown prompt spec {spec!r}")
