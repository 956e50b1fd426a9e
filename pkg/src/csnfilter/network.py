"""Coupled social network container, edge-list IO, purification and splitting.

A coupled network has a directed user->user social layer ``T`` and a
user->item behavior layer ``R`` over one shared user index. Original file ids
are kept in ``user_ids`` / ``item_ids`` so results can be written back in the
input's labels.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class NetworkError(ValueError):
    pass


class EdgeFileError(NetworkError):
    def __init__(self, path, lineno, line, reason):
        self.path, self.lineno, self.line = str(path), lineno, line
        super().__init__(f"{path}:{lineno}: {reason}: {line!r}")


class EmptyNetworkError(NetworkError):
    """Purification removed every user or item."""


def _frozen(a, dtype=np.int64, cols=None):
    a = np.asarray(a, dtype=dtype)
    if cols is not None:
        a = a.reshape(-1, cols)
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _unique_rows(edges):
    if len(edges) == 0:
        return edges.reshape(0, 2), 0
    uniq = np.unique(edges, axis=0)
    return uniq, len(edges) - len(uniq)


@dataclass(frozen=True)
class LoadReport:
    social_lines: int = 0
    behavior_lines: int = 0
    social_duplicates: int = 0
    behavior_duplicates: int = 0
    self_loops: int = 0


@dataclass(frozen=True, eq=False)
class CoupledNetwork:
    """Immutable two-layer network.

    ``social`` rows are ``(i, j)`` meaning user i links to user j; ``behavior``
    rows are ``(u, item)``. Both are sorted, duplicate-free and in range.
    """

    n_users: int
    n_items: int
    social: np.ndarray
    behavior: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray
    load_report: LoadReport | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, social, behavior, n_users=None, n_items=None,
                   user_ids=None, item_ids=None, load_report=None):
        social = np.asarray(social, dtype=np.int64).reshape(-1, 2)
        behavior = np.asarray(behavior, dtype=np.int64).reshape(-1, 2)
        if n_users is None:
            n_users = int(max(social.max(initial=-1), behavior[:, 0].max(initial=-1)) + 1)
        if n_items is None:
            n_items = int(behavior[:, 1].max(initial=-1) + 1)
        if user_ids is None:
            user_ids = np.arange(n_users)
        if item_ids is None:
            item_ids = np.arange(n_items)
        if len(user_ids) != n_users or len(item_ids) != n_items:
            raise NetworkError("id map length does not match index size")
        if (social < 0).any() or (social >= n_users).any():
            raise NetworkError("social edge endpoint out of range")
        if (behavior < 0).any() or (behavior[:, 0] >= n_users).any() or (behavior[:, 1] >= n_items).any():
            raise NetworkError("behavior edge endpoint out of range")
        if (social[:, 0] == social[:, 1]).any():
            raise NetworkError("self-loop in social layer")
        social, dup_s = _unique_rows(social)
        behavior, dup_b = _unique_rows(behavior)
        if dup_s or dup_b:
            raise NetworkError(f"duplicate edges (social={dup_s}, behavior={dup_b})")
        return cls(int(n_users), int(n_items), _frozen(social, cols=2), _frozen(behavior, cols=2),
                   _frozen(user_ids), _frozen(item_ids), load_report)

    def with_behavior(self, behavior):
        """Same users, items and social layer; different behavior edges."""
        behavior = np.asarray(behavior, dtype=np.int64).reshape(-1, 2)
        behavior = behavior[np.lexsort((behavior[:, 1], behavior[:, 0]))]
        return CoupledNetwork(self.n_users, self.n_items, self.social, _frozen(behavior, cols=2),
                              self.user_ids, self.item_ids)

    def reversed_social(self):
        """Copy with every social edge reversed (the transpose graph)."""
        rev = self.social[:, ::-1]
        rev = rev[np.lexsort((rev[:, 1], rev[:, 0]))]
        return CoupledNetwork(self.n_users, self.n_items, _frozen(rev, cols=2), self.behavior,
                              self.user_ids, self.item_ids)

    @property
    def n_social(self):
        return len(self.social)

    @property
    def n_behavior(self):
        return len(self.behavior)

    @cached_property
    def T(self):
        """Social adjacency, ``T[i, j] = 1`` iff i links to j (CSR)."""
        m = self.n_users
        data = np.ones(len(self.social))
        return sp.csr_matrix((data, (self.social[:, 0], self.social[:, 1])), shape=(m, m))

    @cached_property
    def R(self):
        """User-item adjacency (CSR, sorted indices)."""
        data = np.ones(len(self.behavior))
        R = sp.csr_matrix((data, (self.behavior[:, 0], self.behavior[:, 1])),
                          shape=(self.n_users, self.n_items))
        R.sort_indices()
        return R

    @cached_property
    def out_degree(self):
        return np.bincount(self.social[:, 0], minlength=self.n_users)

    @cached_property
    def in_degree(self):
        return np.bincount(self.social[:, 1], minlength=self.n_users)

    @cached_property
    def user_item_degree(self):
        return np.bincount(self.behavior[:, 0], minlength=self.n_users)

    @cached_property
    def item_degree(self):
        return np.bincount(self.behavior[:, 1], minlength=self.n_items)

    def same_edges(self, other):
        return (self.n_users == other.n_users and self.n_items == other.n_items
                and np.array_equal(self.social, other.social)
                and np.array_equal(self.behavior, other.behavior)
                and np.array_equal(self.user_ids, other.user_ids)
                and np.array_equal(self.item_ids, other.item_ids))


# --------------------------------------------------------------------------
# edge-list IO


def read_edge_file(path):
    """Parse ``a<TAB>b`` integer lines; ``#`` starts a comment line."""
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeFileError(path, lineno, line, "expected two columns")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeFileError(path, lineno, line, "non-integer id") from None
            if a < 0 or b < 0:
                raise EdgeFileError(path, lineno, line, "negative id")
            rows.append((a, b))
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def write_edge_file(path, edges, header=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for a, b in np.asarray(edges).reshape(-1, 2).tolist():
            fh.write(f"{a}\t{b}\n")


def network_from_raw(social_raw, behavior_raw, extra_users=()):
    """Build a network from raw-id edge arrays, re-indexing densely.

    Users are the union of ids across both layers (sorted); items are the ids
    that occur in ``behavior_raw``. Social self-loops are dropped and
    duplicates in either layer removed; both are counted in ``load_report``.
    """
    social_raw = np.asarray(social_raw, dtype=np.int64).reshape(-1, 2)
    behavior_raw = np.asarray(behavior_raw, dtype=np.int64).reshape(-1, 2)
    loops = social_raw[:, 0] == social_raw[:, 1]
    n_loops = int(loops.sum())
    user_ids = np.unique(np.concatenate([social_raw.ravel(), behavior_raw[:, 0],
                                         np.asarray(extra_users, dtype=np.int64)]))
    item_ids = np.unique(behavior_raw[:, 1])
    social_raw = social_raw[~loops]
    social = np.searchsorted(user_ids, social_raw)
    behavior = np.column_stack([np.searchsorted(user_ids, behavior_raw[:, 0]),
                                np.searchsorted(item_ids, behavior_raw[:, 1])]).astype(np.int64)
    social, dup_s = _unique_rows(social)
    behavior, dup_b = _unique_rows(behavior)
    report = LoadReport(len(social_raw) + n_loops, len(behavior_raw), dup_s, dup_b, n_loops)
    if n_loops:
        log.warning("dropped %d social self-loop(s)", n_loops)
    if dup_s or dup_b:
        log.warning("removed duplicate edges: social=%d behavior=%d", dup_s, dup_b)
    return CoupledNetwork.from_edges(social, behavior, len(user_ids), len(item_ids),
                                     user_ids, item_ids, load_report=report)


def load_network(social_path, behavior_path):
    """Load a coupled network from two tab-separated edge-list files."""
    return network_from_raw(read_edge_file(social_path), read_edge_file(behavior_path))


def save_network(net, social_path, behavior_path):
    """Write both layers using the original ids."""
    write_edge_file(social_path, net.user_ids[net.social], "source\ttarget")
    write_edge_file(behavior_path, np.column_stack([net.user_ids[net.behavior[:, 0]],
                                                    net.item_ids[net.behavior[:, 1]]]),
                    "user\titem")


# --------------------------------------------------------------------------
# purification


@dataclass(frozen=True)
class PurifyThresholds:
    min_out: int = 1
    min_in: int = 26
    min_user_items: int = 7
    min_item_users: int = 7

    @classmethod
    def parse(cls, text):
        """``"1,26,7,7"`` -> thresholds (min_out, min_in, min_user_items, min_item_users)."""
        parts = [int(p) for p in str(text).split(",")]
        if len(parts) != 4 or min(parts) < 0:
            raise ValueError(f"thresholds need four non-negative integers, got {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.min_out},{self.min_in},{self.min_user_items},{self.min_item_users}"


EPINIONS_THRESHOLDS = PurifyThresholds(1, 26, 7, 7)
FRIENDFEED_THRESHOLDS = PurifyThresholds(1, 2, 8, 8)


def _subnetwork(net, keep_users, keep_items):
    u_map = np.cumsum(keep_users) - 1
    i_map = np.cumsum(keep_items) - 1
    s = net.social
    s = s[keep_users[s[:, 0]] & keep_users[s[:, 1]]]
    b = net.behavior
    b = b[keep_users[b[:, 0]] & keep_items[b[:, 1]]]
    social = np.column_stack([u_map[s[:, 0]], u_map[s[:, 1]]])
    behavior = np.column_stack([u_map[b[:, 0]], i_map[b[:, 1]]])
    return CoupledNetwork(int(keep_users.sum()), int(keep_items.sum()),
                          _frozen(social, cols=2), _frozen(behavior, cols=2),
                          _frozen(net.user_ids[keep_users]), _frozen(net.item_ids[keep_items]))


def purify(net, thresholds=EPINIONS_THRESHOLDS, max_rounds=None):
    """Drop users and items below the degree thresholds until nothing changes.

    A user survives with out-degree >= min_out, in-degree >= min_in and at
    least min_user_items items; an item survives with at least min_item_users
    collectors, all counted among surviving nodes. Returns ``net`` itself when
    nothing is removed.
    """
    th = thresholds
    m, n = net.n_users, net.n_items
    alive_u = np.ones(m, dtype=bool)
    alive_i = np.ones(n, dtype=bool)
    s, b = net.social, net.behavior
    rounds = 0
    while True:
        s = s[alive_u[s[:, 0]] & alive_u[s[:, 1]]]
        b = b[alive_u[b[:, 0]] & alive_i[b[:, 1]]]
        out_deg = np.bincount(s[:, 0], minlength=m)
        in_deg = np.bincount(s[:, 1], minlength=m)
        u_deg = np.bincount(b[:, 0], minlength=m)
        i_deg = np.bincount(b[:, 1], minlength=n)
        new_u = alive_u & (out_deg >= th.min_out) & (in_deg >= th.min_in) & (u_deg >= th.min_user_items)
        new_i = alive_i & (i_deg >= th.min_item_users)
        if np.array_equal(new_u, alive_u) and np.array_equal(new_i, alive_i):
            break
        alive_u, alive_i = new_u, new_i
        rounds += 1
        if max_rounds is not None and rounds >= max_rounds:
            break
    log.debug("purify: %d round(s), %d/%d users, %d/%d items kept",
              rounds, alive_u.sum(), m, alive_i.sum(), n)
    if rounds == 0:
        return net
    if not alive_u.any() or not alive_i.any():
        raise EmptyNetworkError(f"purification with thresholds ({th}) left an empty network")
    return _subnetwork(net, alive_u, alive_i)


# --------------------------------------------------------------------------
# train/test split


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: CoupledNetwork
    test: np.ndarray  # (k, 2) user/item index pairs, sorted
    seed: int
    ratio: float = 0.9

    @cached_property
    def test_matrix(self):
        t = self.test
        M = sp.csr_matrix((np.ones(len(t)), (t[:, 0], t[:, 1])),
                          shape=(self.train.n_users, self.train.n_items))
        M.sort_indices()
        return M


def split(net, ratio=0.9, seed=0):
    """Randomly keep ``floor(ratio * N_R)`` behavior edges for training.

    The social layer is carried into the training network untouched; the
    remaining behavior edges form the test set.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    n_train = int(np.floor(ratio * net.n_behavior))
    perm = rng.permutation(net.n_behavior)
    train_mask = np.zeros(net.n_behavior, dtype=bool)
    train_mask[perm[:n_train]] = True
    train = net.with_behavior(net.behavior[train_mask])
    return SplitPair(train, _frozen(net.behavior[~train_mask], cols=2), int(seed), float(ratio))


# --------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class DatasetStats:
    user_count: int
    item_count: int
    rating_count: int
    social_link_count: int
    rating_sparsity: float
    social_sparsity: float

    def to_json(self, **kw):
        return json.dumps(asdict(self), **kw)


def stats(net):
    m, n = net.n_users, net.n_items
    if m == 0:
        raise NetworkError("stats of an empty network")
    s_r = net.n_behavior / (m * n) if n else 0.0
    s_s = net.n_social / (m * (m - 1)) if m > 1 else 0.0
    return DatasetStats(m, n, net.n_behavior, net.n_social, s_r, s_s)
