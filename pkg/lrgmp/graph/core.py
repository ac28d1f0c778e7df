# lrgmp - Graph storage
# AGPL-3.0-or-later
#
# Graph: CSR-indexed directed edge store with node/edge features and weights.
# Canonical edge order = CSR by source, destinations strictly increasing inside
# each source slice. Every per-edge array in the package (messages, prompts,
# prompt weights) is aligned to this order.
#
# Undirected graphs are materialized as symmetric directed pairs with equal
# weight and edge features on both directions.

from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix

from lrgmp.errors import GraphError, ShapeError


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable graph value.

    Edge i runs from ``src[i]`` (u) to ``dst[i]`` (v) and carries the
    message M_{v<-u}; ``edge_weight[i]`` is A_{vu}.
    """

    num_nodes: int                  # N
    row_offsets: np.ndarray         # (N+1,) int64 - CSR offsets by source
    dst: np.ndarray                 # (|E|,) int64
    edge_weight: np.ndarray         # (|E|,) float64
    node_feat: np.ndarray           # (N, d_V) float64
    edge_feat: np.ndarray           # (|E|, d_E) float64, d_E may be 0
    labels: np.ndarray | None = None    # (N,) int64, -1 = unlabelled
    directed: bool = True

    def __post_init__(self):
        n = int(self.num_nodes)
        offsets = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        weight = np.ascontiguousarray(self.edge_weight, dtype=np.float64)
        node_feat = np.ascontiguousarray(self.node_feat, dtype=np.float64)
        edge_feat = np.ascontiguousarray(self.edge_feat, dtype=np.float64)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "row_offsets", offsets)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "edge_weight", weight)
        object.__setattr__(self, "node_feat", node_feat)
        object.__setattr__(self, "edge_feat", edge_feat)
        if self.labels is not None:
            object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.int64))
        self._validate()

    # --- Invariants ---

    def _validate(self):
        n, m = self.num_nodes, len(self.dst)
        offsets = self.row_offsets
        if n < 0:
            raise GraphError(f"num_nodes must be >= 0, got {n}")
        if offsets.shape != (n + 1,):
            raise GraphError(f"row_offsets must have length {n + 1}, got {offsets.shape}")
        if offsets[0] != 0 or offsets[-1] != m or np.any(np.diff(offsets) < 0):
            raise GraphError("row_offsets must be nondecreasing from 0 to |E|")
        if m and (self.dst.min() < 0 or self.dst.max() >= n):
            raise GraphError(f"destination index out of range [0, {n})")
        if self.edge_weight.shape != (m,):
            raise GraphError(f"edge_weight length {self.edge_weight.shape} != |E| = {m}")
        if self.node_feat.ndim != 2 or self.node_feat.shape[0] != n:
            raise ShapeError(f"node_feat must be (N={n}, d_V), got {self.node_feat.shape}")
        if self.edge_feat.ndim != 2 or self.edge_feat.shape[0] != m:
            raise ShapeError(f"edge_feat must be (|E|={m}, d_E), got {self.edge_feat.shape}")
        if self.labels is not None and self.labels.shape != (n,):
            raise GraphError(f"labels length {self.labels.shape} != N = {n}")
        for name, arr in (("edge_weight", self.edge_weight),
                          ("node_feat", self.node_feat),
                          ("edge_feat", self.edge_feat)):
            if not np.all(np.isfinite(arr)):
                raise GraphError(f"{name} contains non-finite values")

        # Canonical order: strictly increasing keys src*N + dst
        keys = self.edge_keys()
        if m > 1 and np.any(np.diff(keys) <= 0):
            raise GraphError("edges are not in canonical (src, dst) order or contain duplicates")

        if not self.directed and m:
            rev = reverse_edge_index(self)
            if np.any(rev < 0):
                i = int(np.flatnonzero(rev < 0)[0])
                raise GraphError(
                    f"undirected graph is missing reverse of edge "
                    f"({int(self.src[i])}, {int(self.dst[i])})"
                )
            if not (np.array_equal(self.edge_weight, self.edge_weight[rev])
                    and np.array_equal(self.edge_feat, self.edge_feat[rev])):
                raise GraphError("undirected edge pair carries different weight or features")

    # --- Convenience properties ---

    @property
    def num_edges(self) -> int:
        return len(self.dst)

    @property
    def d_v(self) -> int:
        return self.node_feat.shape[1]

    @property
    def d_e(self) -> int:
        return self.edge_feat.shape[1]

    @property
    def src(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.row_offsets))

    def edge_keys(self) -> np.ndarray:
        return self.src * self.num_nodes + self.dst

    def in_degree(self) -> np.ndarray:
        """Unweighted count of incoming edges, |N_v|."""
        return np.bincount(self.dst, minlength=self.num_nodes).astype(np.int64)

    def edge_list(self) -> np.ndarray:
        """(|E|, 2) array of (src, dst) in canonical order."""
        return np.stack([self.src, self.dst], axis=1)

    def adjacency(self) -> csr_matrix:
        """Sparse weighted adjacency with rows = source, columns = destination."""
        n = self.num_nodes
        return csr_matrix((self.edge_weight, self.dst, self.row_offsets), shape=(n, n))

    def edge_index(self, src: int, dst: int) -> int:
        """Position of edge (src, dst) in canonical order, or -1."""
        lo, hi = self.row_offsets[src], self.row_offsets[src + 1]
        pos = lo + int(np.searchsorted(self.dst[lo:hi], dst))
        return pos if pos < hi and self.dst[pos] == dst else -1

    def with_node_feat(self, node_feat: np.ndarray) -> "Graph":
        return replace(self, node_feat=node_feat)

    def same_as(self, other: "Graph") -> bool:
        """Exact equality of topology, weights, features, labels and directedness."""
        if self.num_nodes != other.num_nodes or self.directed != other.directed:
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return all(np.array_equal(a, b) and a.shape == b.shape for a, b in (
            (self.row_offsets, other.row_offsets),
            (self.dst, other.dst),
            (self.edge_weight, other.edge_weight),
            (self.node_feat, other.node_feat),
            (self.edge_feat, other.edge_feat),
        ))


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train / val / test node index sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))

    def validate(self, num_nodes: int) -> "SplitSpec":
        parts = (self.train, self.val, self.test)
        for name, idx in zip(("train", "val", "test"), parts):
            if idx.size and (idx.min() < 0 or idx.max() >= num_nodes):
                raise GraphError(f"split '{name}' has node ids outside [0, {num_nodes})")
            if len(np.unique(idx)) != len(idx):
                raise GraphError(f"split '{name}' contains repeated node ids")
        joined = np.concatenate(parts)
        if len(np.unique(joined)) != len(joined):
            raise GraphError("train / val / test splits overlap")
        return self


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def reverse_edge_index(graph: Graph) -> np.ndarray:
    """For each edge (u, v), the position of (v, u), or -1 when absent."""
    n = graph.num_nodes
    keys = graph.edge_keys()
    rev_keys = graph.dst * n + graph.src
    pos = np.searchsorted(keys, rev_keys)
    pos_clipped = np.minimum(pos, max(len(keys) - 1, 0))
    found = (pos < len(keys)) & (keys[pos_clipped] == rev_keys) if len(keys) else np.zeros(0, bool)
    return np.where(found, pos_clipped, -1).astype(np.int64)


def from_arrays(
    num_nodes: int,
    src: np.ndarray,
    dst: np.ndarray,
    node_feat: np.ndarray,
    edge_feat: np.ndarray | None = None,
    weights: np.ndarray | None = None,
    labels: np.ndarray | None = None,
    directed: bool = True,
) -> Graph:
    """Canonicalize already-directed edge arrays into a Graph.

    Raises
    ------
    GraphError : out-of-range index, duplicate (src, dst), length mismatch
    """
    n = int(num_nodes)
    src = np.asarray(src, dtype=np.int64).reshape(-1)
    dst = np.asarray(dst, dtype=np.int64).reshape(-1)
    m = len(src)
    if len(dst) != m:
        raise GraphError(f"src/dst length mismatch: {m} vs {len(dst)}")
    if m and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
        bad = int(np.flatnonzero((src < 0) | (src >= n) | (dst < 0) | (dst >= n))[0])
        raise GraphError(
            f"edge {bad} = ({int(src[bad])}, {int(dst[bad])}) has a node id outside [0, {n})"
        )

    node_feat = np.asarray(node_feat, dtype=np.float64)
    if node_feat.ndim == 1 and n == 0:
        node_feat = node_feat.reshape(0, 0)
    if edge_feat is None:
        edge_feat = np.zeros((m, 0), dtype=np.float64)
    edge_feat = np.asarray(edge_feat, dtype=np.float64)
    if edge_feat.ndim == 1 and m == 0:
        edge_feat = edge_feat.reshape(0, 0)
    if edge_feat.ndim != 2 or edge_feat.shape[0] != m:
        raise GraphError(f"edge_feat rows {edge_feat.shape} do not match {m} edges")
    weights = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(weights) != m:
        raise GraphError(f"weights length {len(weights)} does not match {m} edges")

    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    keys = src * n + dst
    if m > 1:
        dup = np.flatnonzero(np.diff(keys) == 0)
        if dup.size:
            i = int(dup[0])
            raise GraphError(f"duplicate edge ({int(src[i])}, {int(dst[i])})")

    offsets = np.zeros(n + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(src, minlength=n))
    return Graph(
        num_nodes=n,
        row_offsets=offsets,
        dst=dst,
        edge_weight=weights[order],
        node_feat=node_feat,
        edge_feat=edge_feat[order],
        labels=labels,
        directed=directed,
    )


def from_edge_list(
    n: int,
    edges,
    node_feat,
    edge_feat=None,
    weights=None,
    labels=None,
    directed: bool = True,
) -> Graph:
    """Build a canonical Graph from an edge list in any order.

    For ``directed=False`` every listed pair (u, v) is expanded into both
    directions with the same weight and features; a self-loop is stored once.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src, dst = edges[:, 0], edges[:, 1]
    m = len(edges)
    if edge_feat is not None:
        edge_feat = np.asarray(edge_feat, dtype=np.float64)
        if edge_feat.ndim != 2 or edge_feat.shape[0] != m:
            raise GraphError(f"edge_feat rows {edge_feat.shape} do not match {m} edges")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(weights) != m:
            raise GraphError(f"weights length {len(weights)} does not match {m} edges")

    if not directed:
        back = src != dst
        src, dst = np.concatenate([src, dst[back]]), np.concatenate([dst, src[back]])
        if edge_feat is not None:
            edge_feat = np.concatenate([edge_feat, edge_feat[back]])
        if weights is not None:
            weights = np.concatenate([weights, weights[back]])

    return from_arrays(n, src, dst, node_feat, edge_feat, weights, labels, directed)


def add_self_loops(graph: Graph) -> Graph:
    """Add a weight-1, zero-feature self-loop to every node that lacks one."""
    n = graph.num_nodes
    has_loop = np.zeros(n, dtype=bool)
    has_loop[graph.src[graph.src == graph.dst]] = True
    missing = np.flatnonzero(~has_loop)
    if missing.size == 0:
        return graph
    return from_arrays(
        n,
        np.concatenate([graph.src, missing]),
        np.concatenate([graph.dst, missing]),
        graph.node_feat,
        np.concatenate([graph.edge_feat, np.zeros((missing.size, graph.d_e))]),
        np.concatenate([graph.edge_weight, np.ones(missing.size)]),
        graph.labels,
        graph.directed,
    )


def symmetric_normalize(graph: Graph, add_loops: bool = False) -> tuple[Graph, np.ndarray]:
    """Laplacian-normalized edge weights Â_vu = A_vu / sqrt(deg(v) deg(u)).

    Degrees are weighted in-degrees, computed after optional self-loop
    insertion. Returns the graph the weights are aligned to (self-looped when
    requested) and the per-edge weights in its canonical order. A node of
    degree 0 contributes weight 0.

    Raises
    ------
    GraphError : negative edge weights
    """
    if np.any(graph.edge_weight < 0):
        raise GraphError("symmetric normalization needs nonnegative edge weights")
    g = add_self_loops(graph) if add_loops else graph
    deg = np.bincount(g.dst, weights=g.edge_weight, minlength=g.num_nodes)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    return g, g.edge_weight * inv_sqrt[g.dst] * inv_sqrt[g.src]
