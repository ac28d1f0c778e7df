# lrgmp - Scatter-add kernels
# AGPL-3.0-or-later
#
# Sum aggregation adds message rows into their destination rows strictly in
# canonical edge order. The numba kernel and the numpy.add.at fallback follow
# the same order and produce bit-identical results.

import numpy as np

# Optional JIT - never raise on a missing or broken numba install
try:
    from numba import njit
    JIT_AVAILABLE = True
except Exception:
    JIT_AVAILABLE = False


if JIT_AVAILABLE:
    @njit(cache=False, fastmath=False)
    def _scatter_jit(rows, index, out):
        for i in range(rows.shape[0]):
            t = index[i]
            for j in range(rows.shape[1]):
                out[t, j] += rows[i, j]


def scatter_rows(rows: np.ndarray, index: np.ndarray, num_targets: int,
                 use_jit: bool | None = None) -> np.ndarray:
    """out[index[i]] += rows[i] for i in order. 1-D rows give a 1-D result."""
    flat = rows.ndim == 1
    rows2 = np.ascontiguousarray(rows.reshape(-1, 1) if flat else rows, dtype=np.float64)
    index = np.ascontiguousarray(index, dtype=np.int64)
    out = np.zeros((num_targets, rows2.shape[1]), dtype=np.float64)
    if rows2.shape[0] and rows2.shape[1]:
        jit = JIT_AVAILABLE if use_jit is None else (use_jit and JIT_AVAILABLE)
        if jit:
            _scatter_jit(rows2, index, out)
        else:
            np.add.at(out, index, rows2)
    return out[:, 0] if flat else out
