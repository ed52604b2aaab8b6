"""Column reduction over Z/2 with sorted sparse columns.

One call reduces all columns of a single dimension: rows are the cells of
the facet dimension, identified by their rank within that dimension. The
numba kernel is used when available; the pure-Python mirror implements the
identical algorithm and is kept both as a fallback and as the readable
reference.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _reduce_kernel(faces: np.ndarray, offsets: np.ndarray, n_rows: int,
                   skip: np.ndarray):
    """Left-to-right reduction of one dimension's boundary columns.

    Columns arrive as ascending row-rank arrays (CSR). A column ends either
    empty (positive cell) or with a fresh pivot, in which case it is stored
    for later additions. Returns (pivot rows, column ids, positive flags).
    """
    n_cols = offsets.size - 1
    owner_start = np.full(n_rows, -1, np.int64)
    owner_len = np.zeros(n_rows, np.int64)
    pool = np.empty(1024, np.int64)
    pool_used = 0

    cur = np.empty(256, np.int64)
    tmp = np.empty(256, np.int64)

    pair_row = np.empty(n_cols, np.int64)
    pair_col = np.empty(n_cols, np.int64)
    n_pairs = 0
    positive = np.zeros(n_cols, np.bool_)

    for j in range(n_cols):
        if skip[j]:
            continue
        length = offsets[j + 1] - offsets[j]
        while cur.size < length:
            cur = np.empty(cur.size * 2, np.int64)
        for t in range(length):
            cur[t] = faces[offsets[j] + t]

        while length > 0:
            piv = cur[length - 1]
            start = owner_start[piv]
            if start == -1:
                # claim the pivot; persist the reduced column
                while pool_used + length > pool.size:
                    bigger = np.empty(pool.size * 2, np.int64)
                    bigger[:pool_used] = pool[:pool_used]
                    pool = bigger
                owner_start[piv] = pool_used
                owner_len[piv] = length
                for t in range(length):
                    pool[pool_used + t] = cur[t]
                pool_used += length
                pair_row[n_pairs] = piv
                pair_col[n_pairs] = j
                n_pairs += 1
                break
            # symmetric difference with the stored owner column
            olen = owner_len[piv]
            while tmp.size < length + olen:
                tmp = np.empty(tmp.size * 2, np.int64)
            a = b = out = 0
            while a < length and b < olen:
                ra = cur[a]
                rb = pool[start + b]
                if ra < rb:
                    tmp[out] = ra
                    a += 1
                    out += 1
                elif rb < ra:
                    tmp[out] = rb
                    b += 1
                    out += 1
                else:
                    a += 1
                    b += 1
            while a < length:
                tmp[out] = cur[a]
                a += 1
                out += 1
            while b < olen:
                tmp[out] = pool[start + b]
                b += 1
                out += 1
            cur, tmp = tmp, cur
            length = out
        if length == 0:
            positive[j] = True

    return pair_row[:n_pairs], pair_col[:n_pairs], positive


def _reduce_py(faces, offsets, n_rows, skip):
    """Pure-Python mirror of the kernel (sets instead of sorted arrays)."""
    owner: dict[int, frozenset] = {}
    pair_row, pair_col = [], []
    positive = np.zeros(offsets.size - 1, np.bool_)
    for j in range(offsets.size - 1):
        if skip[j]:
            continue
        col = frozenset(int(r) for r in faces[offsets[j] : offsets[j + 1]])
        while col:
            piv = max(col)
            if piv not in owner:
                owner[piv] = col
                pair_row.append(piv)
                pair_col.append(j)
                break
            col = col ^ owner[piv]
        if not col:
            positive[j] = True
    return (
        np.array(pair_row, dtype=np.int64),
        np.array(pair_col, dtype=np.int64),
        positive,
    )


def reduce_dimension(
    faces: np.ndarray, offsets: np.ndarray, n_rows: int, skip: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    skip = np.ascontiguousarray(skip, dtype=np.bool_)
    if _HAVE_NUMBA:
        return _reduce_kernel(faces, offsets, int(n_rows), skip)
    return _reduce_py(faces, offsets, n_rows, skip)
