# lrgmp - Message construction and aggregation
# AGPL-3.0-or-later
#
# Message matrix M: one row per directed edge (v <- u) in canonical order,
# width d_V + d_E for every message function. Functions that carry no edge
# information (GcnNorm, Attention) zero-fill the edge block.
#
#   ConcatMPNN : A_vu [H_u || E_vu]
#   GcnNorm    : [Â_vu H_u || 0]     (Â from symmetric_normalize)
#   Attention  : [α_vu H_u || 0]     (α softmax over v's incoming edges)

from dataclasses import dataclass

import numpy as np

from lrgmp.config import ATTENTION_SLOPE
from lrgmp.errors import ParameterError, ShapeError
from lrgmp.graph.core import Graph, add_self_loops, symmetric_normalize
from lrgmp.linalg.dense import Mat, as_mat, as_vec, leaky_relu
from lrgmp.message.kernels import scatter_rows


@dataclass(frozen=True, eq=False)
class MessageMatrix:
    mat: Mat            # (|E|, d_v_span + d_e_span)
    d_v_span: int
    d_e_span: int

    def __post_init__(self):
        if self.mat.ndim != 2 or self.mat.shape[1] != self.d_v_span + self.d_e_span:
            raise ShapeError(
                f"message matrix {self.mat.shape} does not match spans "
                f"{self.d_v_span} + {self.d_e_span}"
            )

    @property
    def width(self) -> int:
        return self.d_v_span + self.d_e_span

    @property
    def num_edges(self) -> int:
        return self.mat.shape[0]


# --- Message functions ---

@dataclass(frozen=True)
class ConcatMPNN:
    pass


@dataclass(frozen=True)
class GcnNorm:
    add_self_loops: bool = False


@dataclass(frozen=True, eq=False)
class Attention:
    W: Mat                  # (d_V, d_att)
    a: np.ndarray           # (2 * d_att,)
    slope: float = ATTENTION_SLOPE

    def __post_init__(self):
        object.__setattr__(self, "W", as_mat(self.W, "attention W"))
        object.__setattr__(self, "a", as_vec(self.a, "attention a"))
        if self.a.shape[0] != 2 * self.W.shape[1]:
            raise ShapeError(
                f"attention vector a has length {self.a.shape[0]}, "
                f"expected 2 x {self.W.shape[1]}"
            )


MessageFn = ConcatMPNN | GcnNorm | Attention


def message_graph(graph: Graph, fn: MessageFn) -> Graph:
    """The graph whose canonical edges the messages of `fn` are aligned to."""
    if isinstance(fn, GcnNorm) and fn.add_self_loops:
        return add_self_loops(graph)
    return graph


def edge_coefficients(graph: Graph, fn: MessageFn, H: Mat | None = None) -> tuple[Graph, np.ndarray]:
    """Per-edge scalar multiplying H_u: A_vu, Â_vu or α_vu, with its aligned graph."""
    if isinstance(fn, ConcatMPNN):
        return graph, graph.edge_weight
    if isinstance(fn, GcnNorm):
        return symmetric_normalize(graph, fn.add_self_loops)
    if isinstance(fn, Attention):
        if H is None:
            raise ShapeError("attention coefficients need node features H")
        return graph, attention_coefficients(graph, H, fn.W, fn.a, fn.slope)
    raise ParameterError(f"unknown message function {fn!r}")


def build_messages(graph: Graph, H: Mat, fn: MessageFn | None = None) -> MessageMatrix:
    """Per-edge message matrix for `fn` (default ConcatMPNN).

    Rows are aligned to ``message_graph(graph, fn)``.

    Raises
    ------
    ShapeError : H row count differs from N, attention shapes inconsistent
    """
    fn = fn or ConcatMPNN()
    H = as_mat(H, "H")
    if H.shape[0] != graph.num_nodes:
        raise ShapeError(f"H has {H.shape[0]} rows, graph has {graph.num_nodes} nodes")
    g, coef = edge_coefficients(graph, fn, H)
    d_v, d_e = H.shape[1], g.d_e
    mat = np.zeros((g.num_edges, d_v + d_e))
    mat[:, :d_v] = coef[:, None] * H[g.src]
    if isinstance(fn, ConcatMPNN):
        mat[:, d_v:] = coef[:, None] * g.edge_feat
    return MessageMatrix(mat, d_v, d_e)


def aggregate(graph: Graph, M: MessageMatrix, mode: str = "sum") -> Mat:
    """Row v = sum (or mean) of the message rows whose destination is v.

    Nodes without incoming edges get a zero row. The self term H_v is left to
    the backbone layer.
    """
    if M.num_edges != graph.num_edges:
        raise ShapeError(f"message matrix has {M.num_edges} rows, graph has {graph.num_edges} edges")
    out = scatter_rows(M.mat, graph.dst, graph.num_nodes)
    if mode == "sum":
        return out
    if mode == "mean":
        count = graph.in_degree()
        nz = count > 0
        out[nz] /= count[nz, None]
        return out
    raise ParameterError(f"aggregation mode must be 'sum' or 'mean', got {mode!r}")


def attention_coefficients(graph: Graph, H: Mat, W: Mat, a: np.ndarray,
                           slope: float = ATTENTION_SLOPE) -> np.ndarray:
    """α_vu = softmax over v's incoming edges of LeakyReLU(a^T [W^T H_v || W^T H_u]).

    Nodes with no incoming edges emit no coefficients.
    """
    H, W, a = as_mat(H, "H"), as_mat(W, "W"), as_vec(a, "a")
    if H.shape[1] != W.shape[0] or a.shape[0] != 2 * W.shape[1]:
        raise ShapeError(f"attention shapes inconsistent: H {H.shape}, W {W.shape}, a {a.shape}")
    d_att = W.shape[1]
    HW = H @ W
    score = leaky_relu(HW[graph.dst] @ a[:d_att] + HW[graph.src] @ a[d_att:], slope)
    if graph.num_edges == 0:
        return score
    peak = np.full(graph.num_nodes, -np.inf)
    np.maximum.at(peak, graph.dst, score)
    ex = np.exp(score - peak[graph.dst])
    denom = scatter_rows(ex, graph.dst, graph.num_nodes)
    return ex / denom[graph.dst]


def message_vjp(graph: Graph, coef: np.ndarray, dM: Mat, d_v: int) -> Mat:
    """Gradient w.r.t. H of rows coef_e [H_src(e) || const], given dL/dM."""
    return scatter_rows(coef[:, None] * dM[:, :d_v], graph.src, graph.num_nodes)


def aggregate_vjp(graph: Graph, d_agg: Mat) -> Mat:
    """Gradient w.r.t. the message rows of sum aggregation."""
    return d_agg[graph.dst]
