"""Skip-gram negative-sampling inner loops (numba-compiled).

Single-threaded and fully deterministic: all stochastic choices come from
two xorshift64* streams derived from the training seed, one for window
radii and one for negative samples. The pair-count pass replays the radius
stream so the linear learning-rate decay can be computed over the exact
total number of (target, context) pairs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, stream):
    state = _splitmix64(np.uint64(seed) ^ (np.uint64(stream) * np.uint64(0xA5A5A5A5A5A5A5A5)))
    if state == np.uint64(0):
        state = np.uint64(1)
    return state


@njit(cache=True, inline="always")
def _next(state):
    state ^= state >> np.uint64(12)
    state = (state ^ (state << np.uint64(25))) & _MASK
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True, inline="always")
def _value(state):
    return (state * np.uint64(0x2545F4914F6CDD1D)) & _MASK


@njit(cache=True)
def count_pairs(tokens, line_ptr, epochs, window, seed):
    """Total (target, context) pairs the training pass will process."""
    total = np.int64(0)
    state = _stream_init(seed, 1)
    n_lines = line_ptr.size - 1
    for _epoch in range(epochs):
        for li in range(n_lines):
            start = line_ptr[li]
            end = line_ptr[li + 1]
            for i in range(start, end):
                state = _next(state)
                radius = 1 + np.int64(_value(state) % np.uint64(window))
                lo = max(start, i - radius)
                hi = min(end - 1, i + radius)
                total += hi - lo
    return total


@njit(cache=True)
def train(
    tokens,
    line_ptr,
    row_flat,
    row_ptr,
    neg_table,
    in_mat,
    out_mat,
    epochs,
    window,
    negatives,
    lr0,
    seed,
    total_pairs,
):
    """Run skip-gram with negative sampling in place.

    The input representation of a target token is the sum of its token row
    and its n-gram bucket rows (``row_flat``/``row_ptr`` CSR layout, token
    row first); the accumulated gradient is added to every constituent row.
    """
    dim = in_mat.shape[1]
    hidden = np.zeros(dim, dtype=np.float32)
    grad = np.zeros(dim, dtype=np.float32)
    rad_state = _stream_init(seed, 1)
    neg_state = _stream_init(seed, 2)
    table_size = np.uint64(neg_table.size)
    pairs_done = np.int64(0)
    n_lines = line_ptr.size - 1
    for _epoch in range(epochs):
        for li in range(n_lines):
            start = line_ptr[li]
            end = line_ptr[li + 1]
            for i in range(start, end):
                rad_state = _next(rad_state)
                radius = 1 + np.int64(_value(rad_state) % np.uint64(window))
                lo = max(start, i - radius)
                hi = min(end - 1, i + radius)
                center = tokens[i]
                rs = row_ptr[center]
                re = row_ptr[center + 1]
                for j in range(lo, hi + 1):
                    if j == i:
                        continue
                    context = tokens[j]
                    lr = lr0 * (1.0 - pairs_done / total_pairs)
                    for d in range(dim):
                        hidden[d] = np.float32(0.0)
                        grad[d] = np.float32(0.0)
                    for r in range(rs, re):
                        row = row_flat[r]
                        for d in range(dim):
                            hidden[d] += in_mat[row, d]
                    for k in range(negatives + 1):
                        if k == 0:
                            target = np.int64(context)
                            label = 1.0
                        else:
                            target = np.int64(context)
                            for _attempt in range(32):
                                neg_state = _next(neg_state)
                                target = np.int64(neg_table[_value(neg_state) % table_size])
                                if target != context:
                                    break
                            label = 0.0
                        dot = 0.0
                        for d in range(dim):
                            dot += hidden[d] * out_mat[target, d]
                        f = 1.0 / (1.0 + np.exp(-dot))
                        alpha = np.float32(lr * (label - f))
                        for d in range(dim):
                            grad[d] += alpha * out_mat[target, d]
                            out_mat[target, d] += alpha * hidden[d]
                    for r in range(rs, re):
                        row = row_flat[r]
                        for d in range(dim):
                            in_mat[row, d] += grad[d]
                    pairs_done += 1
