"""Pure-numpy implementations of the per-user hot loops.

These mirror ``_ckernels.pyx`` exactly (same outputs for the same inputs) and
are used whenever the compiled extension is not importable.
"""

import numpy as np


def top_l(scores, excl_indptr, excl_indices, L):
    """Top-``L`` positive-score items per row, skipping excluded columns.

    Ordering is score descending, then item id ascending. Rows with fewer than
    ``L`` positive candidates are padded with item ``-1`` and score ``0.0``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    m = scores.shape[0]
    items = np.full((m, L), -1, dtype=np.int64)
    vals = np.zeros((m, L), dtype=np.float64)
    for u in range(m):
        row = scores[u].copy()
        row[excl_indices[excl_indptr[u]:excl_indptr[u + 1]]] = 0.0
        cand = np.flatnonzero(row > 0.0)
        if cand.size == 0:
            continue
        if cand.size > L:
            # only the L-th largest value and above can make the list
            kth = np.partition(row[cand], cand.size - L)[cand.size - L]
            cand = cand[row[cand] >= kth]
        order = np.lexsort((cand, -row[cand]))[:L]
        k = order.size
        items[u, :k] = cand[order]
        vals[u, :k] = row[cand[order]]
    return items, vals


def count_hits(items, test_indptr, test_indices, L):
    """Number of each row's first ``L`` list entries found in its test set."""
    m = items.shape[0]
    hits = np.zeros(m, dtype=np.int64)
    for u in range(m):
        lo, hi = test_indptr[u], test_indptr[u + 1]
        if lo == hi:
            continue
        row = items[u, :L]
        hits[u] = np.count_nonzero(np.isin(row[row >= 0], test_indices[lo:hi]))
    return hits


def auc_tally(scores, users, pos, neg):
    """Counts of sampled triples where positive > negative, and ties."""
    a = scores[users, pos]
    b = scores[users, neg]
    return int(np.count_nonzero(a > b)), int(np.count_nonzero(a == b))
