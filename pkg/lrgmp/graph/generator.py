# lrgmp - Synthetic graph generators
# AGPL-3.0-or-later
#
# Stochastic block model: each unordered node pair is drawn once (upper
# triangle) with p_in inside a block and p_out across blocks, then stored in
# both directions. Labels are block ids.

import logging

import numpy as np

from lrgmp.errors import ParameterError
from lrgmp.graph.core import Graph, from_edge_list
from lrgmp.linalg.dense import Rng

log = logging.getLogger(__name__)


def sbm_generate(
    rng: Rng,
    block_sizes,
    p_in: float,
    p_out: float,
    d_v: int,
    feature_shift: float,
    noise_std: float = 1.0,
) -> Graph:
    """Undirected SBM graph with block-shifted Gaussian node features.

    Parameters
    ----------
    block_sizes   : nodes per block, block b owns label b
    p_in, p_out   : within / across block edge probabilities in [0, 1]
    d_v           : node feature width
    feature_shift : block b's feature mean is feature_shift along axis b mod d_v
    noise_std     : std of the Gaussian feature noise

    Raises
    ------
    ParameterError : probability outside [0, 1], empty or non-positive blocks, d_v < 1
    """
    sizes = [int(b) for b in block_sizes]
    if not sizes or min(sizes) < 1:
        raise ParameterError(f"block_sizes must be nonempty and positive, got {block_sizes}")
    for name, p in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    if d_v < 1:
        raise ParameterError(f"d_v must be >= 1, got {d_v}")
    if noise_std < 0:
        raise ParameterError(f"noise_std must be >= 0, got {noise_std}")

    labels = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
    n = len(labels)

    # 1. Edges - one Bernoulli draw per unordered pair
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    pairs = np.stack([iu[keep], ju[keep]], axis=1)

    # 2. Features - Gaussian noise plus a block-specific axis shift
    feat = noise_std * rng.standard_normal((n, d_v))
    feat[np.arange(n), labels % d_v] += feature_shift

    log.debug("sbm: %d nodes, %d undirected edges", n, len(pairs))
    return from_edge_list(n, pairs, feat, labels=labels, directed=False)
