"""Hybrid similarity ``S = p^alpha * s^beta`` and user-based CF top-L lists."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .similarity import DEFAULT_C, InfluenceKind


@dataclass(frozen=True)
class HybridParams:
    alpha: float = 1.0
    beta: float = 1.0
    kind: InfluenceKind = InfluenceKind.RWR
    c: float = DEFAULT_C
    L: int = 10

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        object.__setattr__(self, "kind", InfluenceKind(self.kind))


def _dense(m):
    if hasattr(m, "toarray"):
        return m.toarray()
    return np.asarray(m, dtype=np.float64)


def hybrid_similarity(preference, influence, alpha, beta, transpose_influence=False):
    """Dense ``S_ij = p_ij**alpha * s_ij**beta`` with ``0**0 == 1``.

    ``alpha = 0`` gives pure influence, ``beta = 0`` pure preference.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be non-negative")
    p = _dense(preference)
    s = _dense(influence)
    if transpose_influence:
        s = s.T
    if p.shape != s.shape:
        raise ValueError(f"preference {p.shape} and influence {s.shape} differ in shape")
    # np.power(0.0, 0.0) == 1.0, which is the convention we want
    return np.power(p, alpha) * np.power(s, beta)


def cf_scores(train, S):
    """``v[u, j] = sum_{l != u} S[u, l] * R[l, j]`` as a dense C-ordered array."""
    S = np.array(S, dtype=np.float64, copy=True)
    np.fill_diagonal(S, 0.0)
    v = train.R.T @ S.T  # sparse @ dense -> dense (n_items, n_users)
    return np.ascontiguousarray(np.asarray(v).T)


@dataclass(frozen=True, eq=False)
class RecommendationList:
    """``items[u, r]`` is user u's rank-r item (``-1`` pads short lists)."""

    items: np.ndarray
    scores: np.ndarray
    L: int

    @property
    def lengths(self):
        return (self.items >= 0).sum(axis=1)

    @property
    def empty_users(self):
        return np.flatnonzero(self.lengths == 0)

    def for_user(self, u):
        k = int(self.lengths[u])
        return list(zip(self.items[u, :k].tolist(), self.scores[u, :k].tolist()))

    def truncate(self, L):
        if L > self.L:
            raise ValueError(f"cannot extend a top-{self.L} list to {L}")
        return RecommendationList(self.items[:, :L], self.scores[:, :L], L)

    def write(self, path, user_ids=None, item_ids=None):
        """``user<TAB>rank<TAB>item<TAB>score`` with 1-based ranks."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# user\trank\titem\tscore\n")
            for u in range(self.items.shape[0]):
                uid = u if user_ids is None else int(user_ids[u])
                for r, (j, v) in enumerate(self.for_user(u), 1):
                    jid = j if item_ids is None else int(item_ids[j])
                    fh.write(f"{uid}\t{r}\t{jid}\t{v!r}\n")


def top_l_lists(train, scores, L, backend=None):
    """Top-L positive-score items per user, excluding training items."""
    R = train.R
    k = kernels.get_backend(backend)
    items, vals = k.top_l(np.ascontiguousarray(scores, dtype=np.float64), R.indptr, R.indices, int(L))
    return RecommendationList(items, vals, int(L))


def recommend(train, S, L, backend=None):
    """User-based CF over all other users, top-L per user.

    Ties are broken by ascending item id; zero-score items are never listed,
    so users without positive-similarity neighbors get an empty list.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    return top_l_lists(train, cf_scores(train, S), L, backend=backend)
