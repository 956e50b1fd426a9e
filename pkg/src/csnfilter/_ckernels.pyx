# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-user hot loops; drop-in for ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def top_l(const double[:, ::1] scores, excl_indptr, excl_indices, Py_ssize_t L):
    cdef Py_ssize_t m = scores.shape[0], n = scores.shape[1]
    cdef i64[::1] ptr = np.ascontiguousarray(excl_indptr, dtype=np.int64)
    cdef i64[::1] idx = np.ascontiguousarray(excl_indices, dtype=np.int64)
    items_arr = np.full((m, L), -1, dtype=np.int64)
    vals_arr = np.zeros((m, L), dtype=np.float64)
    cdef i64[:, ::1] items = items_arr
    cdef double[:, ::1] vals = vals_arr
    cdef Py_ssize_t u, j, k, size, e, e_end
    cdef double v, worst
    for u in range(m):
        size = 0
        worst = 0.0  # admission threshold: 0 until the buffer fills
        e = ptr[u]
        e_end = ptr[u + 1]
        for j in range(n):
            v = scores[u, j]
            # j ascends, so an equal score never displaces an earlier item
            if v <= worst:
                continue
            # exclusion indices are sorted per row
            while e < e_end and idx[e] < j:
                e += 1
            if e < e_end and idx[e] == j:
                continue
            if size < L:
                size += 1
            k = size - 1
            while k > 0 and vals[u, k - 1] < v:
                vals[u, k] = vals[u, k - 1]
                items[u, k] = items[u, k - 1]
                k -= 1
            vals[u, k] = v
            items[u, k] = j
            if size == L:
                worst = vals[u, L - 1]
    return items_arr, vals_arr


def count_hits(const i64[:, ::1] items, test_indptr, test_indices, Py_ssize_t L):
    cdef Py_ssize_t m = items.shape[0]
    cdef i64[::1] ptr = np.ascontiguousarray(test_indptr, dtype=np.int64)
    cdef i64[::1] idx = np.ascontiguousarray(test_indices, dtype=np.int64)
    hits_arr = np.zeros(m, dtype=np.int64)
    cdef i64[::1] hits = hits_arr
    cdef Py_ssize_t u, r, t, lo, hi, mid
    cdef i64 item
    for u in range(m):
        if ptr[u] == ptr[u + 1]:
            continue
        for r in range(L):
            item = items[u, r]
            if item < 0:
                break
            lo = ptr[u]
            hi = ptr[u + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if idx[mid] < item:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < ptr[u + 1] and idx[lo] == item:
                hits[u] += 1
    return hits_arr


def auc_tally(const double[:, ::1] scores, users, pos, neg):
    cdef i64[::1] us = np.ascontiguousarray(users, dtype=np.int64)
    cdef i64[::1] ps = np.ascontiguousarray(pos, dtype=np.int64)
    cdef i64[::1] ns = np.ascontiguousarray(neg, dtype=np.int64)
    cdef Py_ssize_t t, count = us.shape[0]
    cdef i64 greater = 0, ties = 0
    cdef double a, b
    for t in range(count):
        a = scores[us[t], ps[t]]
        b = scores[us[t], ns[t]]
        if a > b:
            greater += 1
        elif a == b:
            ties += 1
    return int(greater), int(ties)
