# lrgmp - Edge perturbations for robustness runs
# AGPL-3.0-or-later
#
# random_flip   : toggle floor(p * |E_pairs|) node pairs drawn uniformly
# targeted_flip : toggle `budget` pairs incident to one target node
#
# Toggling removes an existing edge or inserts a missing one. Inserted edges
# get weight 1 and zero edge features. Undirected graphs toggle both
# directions; directed graphs toggle the single ordered pair (for targeted
# flips, the edge pointing into the target). Self-loops are never touched.

import logging
import math

import numpy as np

from lrgmp.errors import GraphError, ParameterError
from lrgmp.graph.core import Graph, from_arrays
from lrgmp.linalg.dense import Rng

log = logging.getLogger(__name__)


def random_flip(graph: Graph, p: float, rng: Rng) -> Graph:
    """Flip a fraction p of the graph's (non-loop) edge pairs, chosen among all pairs."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"flip fraction must lie in [0, 1], got {p}")
    n = graph.num_nodes
    src, dst = graph.src, graph.dst
    if graph.directed:
        existing = int(np.count_nonzero(src != dst))
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    else:
        existing = int(np.count_nonzero(src < dst))
        ii, jj = np.triu_indices(n, k=1)

    # Small epsilon keeps products like 0.29 * 100 from flooring to 28
    count = min(math.floor(p * existing + 1e-9), len(ii))
    if count == 0:
        return graph
    pick = np.sort(rng.choice(len(ii), size=count, replace=False))
    log.debug("random_flip: p=%g flips %d of %d candidate pairs", p, count, len(ii))
    return toggle_pairs(graph, np.stack([ii[pick], jj[pick]], axis=1))


def targeted_flip(graph: Graph, target: int, budget: int, rng: Rng) -> Graph:
    """Flip exactly `budget` pairs (w, target), w drawn uniformly among the other nodes.

    Raises
    ------
    ParameterError : negative budget, or budget above N - 1 flippable pairs
    GraphError     : target outside [0, N)
    """
    n = graph.num_nodes
    if not 0 <= target < n:
        raise GraphError(f"target node {target} outside [0, {n})")
    if budget < 0:
        raise ParameterError(f"budget must be >= 0, got {budget}")
    others = np.delete(np.arange(n, dtype=np.int64), target)
    if budget > len(others):
        raise ParameterError(
            f"budget {budget} exceeds the {len(others)} flippable pairs of node {target}"
        )
    if budget == 0:
        return graph
    chosen = np.sort(rng.choice(others, size=budget, replace=False))
    pairs = np.stack([chosen, np.full(budget, target, dtype=np.int64)], axis=1)
    return toggle_pairs(graph, pairs)


def toggle_pairs(graph: Graph, pairs: np.ndarray) -> Graph:
    """Toggle each (a, b) pair; undirected graphs toggle (b, a) with it."""
    n = graph.num_nodes
    src, dst = graph.src, graph.dst
    keys = src * n + dst
    a, b = pairs[:, 0], pairs[:, 1]
    flip = a * n + b
    if not graph.directed:
        flip = np.concatenate([flip, b * n + a])
    flip = np.unique(flip)

    present = np.isin(flip, keys)
    keep = ~np.isin(keys, flip[present])
    added = flip[~present]
    k = len(added)
    return from_arrays(
        n,
        np.concatenate([src[keep], added // n]),
        np.concatenate([dst[keep], added % n]),
        graph.node_feat,
        np.concatenate([graph.edge_feat[keep], np.zeros((k, graph.d_e))]),
        np.concatenate([graph.edge_weight[keep], np.ones(k)]),
        graph.labels,
        graph.directed,
    )
