"""Compiled inner loops. Cells are encoded as ``voxel_index * 8 + extent``."""

import numpy as np
from numba import njit


@njit(cache=True)
def boundary_rows(ids, rank, nx, nxy, p):
    """Sorted face ranks for every cell in ``ids`` (all of dimension ``p``)."""
    n = ids.shape[0]
    k = 2 * p
    rows = np.empty(n * k, dtype=np.int32)
    strides = (1, nx, nxy)
    buf = np.empty(6, dtype=np.int32)
    for j in range(n):
        cid = ids[j]
        lin = cid >> 3
        ext = cid & 7
        m = 0
        for b in range(3):
            bit = 1 << b
            if ext & bit:
                fext = ext ^ bit
                buf[m] = rank[lin * 8 + fext]
                buf[m + 1] = rank[(lin + strides[b]) * 8 + fext]
                m += 2
        # insertion sort, at most 6 entries
        for a in range(1, m):
            v = buf[a]
            c = a - 1
            while c >= 0 and buf[c] > v:
                buf[c + 1] = buf[c]
                c -= 1
            buf[c + 1] = v
        for a in range(m):
            rows[j * k + a] = buf[a]
    return rows


@njit(cache=True)
def _grow(a, need):
    cap = a.shape[0]
    if need <= cap:
        return a
    while cap < need:
        cap = cap * 2 + 16
    out = np.empty(cap, dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def reduce_columns(col_ptr, rows, n_rows, cleared):
    """Left-to-right Z/2 column reduction.

    Returns ``(low, start, length, pool)``; column ``j`` of the reduced matrix
    is ``pool[start[j]:start[j] + length[j]]`` (ascending rows), and ``low[j]``
    is its last row or -1 when the column reduced to zero or was cleared.
    """
    ncols = col_ptr.shape[0] - 1
    pivot = np.full(n_rows, -1, dtype=np.int64)
    low = np.full(ncols, -1, dtype=np.int64)
    start = np.zeros(ncols, dtype=np.int64)
    length = np.zeros(ncols, dtype=np.int64)
    pool = np.empty(max(16, rows.shape[0]), dtype=np.int32)
    used = 0
    work = np.empty(64, dtype=np.int32)
    tmp = np.empty(64, dtype=np.int32)
    for j in range(ncols):
        if cleared[j]:
            continue
        a = col_ptr[j]
        n = col_ptr[j + 1] - a
        work = _grow(work, n)
        for t in range(n):
            work[t] = rows[a + t]
        while n > 0:
            k = pivot[work[n - 1]]
            if k < 0:
                break
            s = start[k]
            m = length[k]
            tmp = _grow(tmp, n + m)
            i1 = 0
            i2 = 0
            o = 0
            while i1 < n and i2 < m:
                r1 = work[i1]
                r2 = pool[s + i2]
                if r1 < r2:
                    tmp[o] = r1
                    o += 1
                    i1 += 1
                elif r2 < r1:
                    tmp[o] = r2
                    o += 1
                    i2 += 1
                else:
                    i1 += 1
                    i2 += 1
            while i1 < n:
                tmp[o] = work[i1]
                o += 1
                i1 += 1
            while i2 < m:
                tmp[o] = pool[s + i2]
                o += 1
                i2 += 1
            work, tmp = tmp, work
            n = o
        if n > 0:
            lw = work[n - 1]
            pivot[lw] = j
            low[j] = lw
            pool = _grow(pool, used + n)
            for t in range(n):
                pool[used + t] = work[t]
            start[j] = used
            length[j] = n
            used += n
    return low, start, length, pool[:used].copy()


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def union_find_pairs(edge_ids, rank, nx, nxy, n_vertices):
    """0-dimensional pairing by the elder rule.

    Returns ``(birth_vertex, death_edge, positive)`` where ``positive[j]`` marks
    edges that close a loop instead of merging two components.
    """
    strides = (1, nx, nxy)
    parent = np.arange(n_vertices)
    births = np.empty(n_vertices, dtype=np.int64)
    deaths = np.empty(n_vertices, dtype=np.int64)
    positive = np.zeros(edge_ids.shape[0], dtype=np.bool_)
    npairs = 0
    for j in range(edge_ids.shape[0]):
        cid = edge_ids[j]
        lin = cid >> 3
        ext = cid & 7
        b = 0 if ext == 1 else (1 if ext == 2 else 2)
        u = rank[lin * 8]
        v = rank[(lin + strides[b]) * 8]
        ru = _find(parent, u)
        rv = _find(parent, v)
        if ru == rv:
            positive[j] = True
            continue
        # roots are always the oldest vertex of their component
        if ru < rv:
            parent[rv] = ru
            births[npairs] = rv
        else:
            parent[ru] = rv
            births[npairs] = ru
        deaths[npairs] = j
        npairs += 1
    return births[:npairs].copy(), deaths[:npairs].copy(), positive
