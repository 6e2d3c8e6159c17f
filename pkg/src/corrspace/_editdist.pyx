# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled token edit distance.

Sequences are int32 id arrays (tokens are interned upstream). The batch
entry point works on a flattened corpus (ids + offsets) and releases the
GIL so callers can fan out over threads.
"""

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int32_t tok_t


cdef cnp.int64_t _lev(const tok_t* a, Py_ssize_t na, const tok_t* b, Py_ssize_t nb,
                      cnp.int64_t* row) nogil:
    """DP over `row` (length na + 1 scratch owned by caller)."""
    cdef Py_ssize_t i, j
    cdef cnp.int64_t above, diag, tmp, cost
    if na == 0:
        return nb
    if nb == 0:
        return na
    for j in range(na + 1):
        row[j] = j
    for i in range(1, nb + 1):
        diag = row[0]
        row[0] = i
        for j in range(1, na + 1):
            above = row[j]
            cost = 0 if a[j - 1] == b[i - 1] else 1
            tmp = diag + cost
            if above + 1 < tmp:
                tmp = above + 1
            if row[j - 1] + 1 < tmp:
                tmp = row[j - 1] + 1
            row[j] = tmp
            diag = above
    return row[na]


def levenshtein(cnp.int32_t[::1] a, cnp.int32_t[::1] b):
    """Unit-cost Levenshtein distance between two id sequences."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef const tok_t* pa = NULL
    cdef const tok_t* pb = NULL
    cdef cnp.int64_t* row
    cdef cnp.int64_t d
    # keep the DP row on the shorter sequence
    if na > nb:
        na, nb = nb, na
        if na:
            pa = &b[0]
        pb = &a[0]
    else:
        if na:
            pa = &a[0]
        if nb:
            pb = &b[0]
    if na == 0:
        return int(nb)
    row = <cnp.int64_t*>malloc((na + 1) * sizeof(cnp.int64_t))
    if row == NULL:
        raise MemoryError()
    with nogil:
        d = _lev(pa, na, pb, nb, row)
    free(row)
    return int(d)


def nearest_block(cnp.int32_t[::1] q_ids, cnp.int64_t[::1] q_off,
                  cnp.int32_t[::1] r_ids, cnp.int64_t[::1] r_off,
                  Py_ssize_t start, Py_ssize_t stop,
                  cnp.int64_t[::1] out_idx, cnp.int64_t[::1] out_dist):
    """Nearest reference (lowest index on ties) for queries [start, stop)."""
    cdef Py_ssize_t nq = q_off.shape[0] - 1
    cdef Py_ssize_t nr = r_off.shape[0] - 1
    cdef Py_ssize_t qi, ri, na, nb, max_len = 0
    cdef cnp.int64_t best, d, gap
    cdef Py_ssize_t best_idx
    cdef cnp.int64_t* row
    cdef const tok_t* qbase = NULL
    cdef const tok_t* rbase = NULL

    if q_ids.shape[0]:
        qbase = &q_ids[0]
    if r_ids.shape[0]:
        rbase = &r_ids[0]
    for qi in range(nq):
        na = q_off[qi + 1] - q_off[qi]
        if na > max_len:
            max_len = na
    for ri in range(nr):
        na = r_off[ri + 1] - r_off[ri]
        if na > max_len:
            max_len = na
    row = <cnp.int64_t*>malloc((max_len + 2) * sizeof(cnp.int64_t))
    if row == NULL:
        raise MemoryError()

    with nogil:
        for qi in range(start, stop):
            na = q_off[qi + 1] - q_off[qi]
            best = -1
            best_idx = 0
            for ri in range(nr):
                nb = r_off[ri + 1] - r_off[ri]
                gap = na - nb if na > nb else nb - na
                if best >= 0 and gap >= best:
                    continue
                d = _lev(qbase + q_off[qi], na, rbase + r_off[ri], nb, row)
                if best < 0 or d < best:
                    best = d
                    best_idx = ri
                    if best == 0:
                        break
            out_idx[qi] = best_idx
            out_dist[qi] = best
    free(row)
