"""Post-hoc analyses: influence vs preference curve, ego network, degree histogram."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import stats as sps

from .evaluation import pairs_matrix

LOW_DEGREE = 5


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CorrelationCurve:
    edges: np.ndarray  # bins + 1 log-spaced influence edges
    centers: np.ndarray  # geometric bin centers
    mean_preference: np.ndarray  # nan for empty bins
    counts: np.ndarray

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "influence_center", "mean_preference", "pairs"])
            for lo, hi, c, mp, n in zip(self.edges[:-1], self.edges[1:], self.centers,
                                        self.mean_preference, self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(c)), repr(float(mp)), int(n)])


def _matrix(x):
    return sp.csr_matrix(x.scores if hasattr(x, "scores") else x)


def influence_pairs(s, p):
    """Off-diagonal pairs with positive influence: (rows, cols, s_ij, p_ij)."""
    S = _matrix(s).tocoo()
    keep = (S.row != S.col) & (S.data > 0)
    rows, cols, sv = S.row[keep], S.col[keep], S.data[keep]
    P = _matrix(p)
    pv = np.asarray(P[rows, cols]).ravel() if len(rows) else np.zeros(0)
    return rows, cols, sv, pv


def influence_preference_curve(s, p, bins=20):
    """Mean preference inside logarithmic bins of positive influence."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    _, _, sv, pv = influence_pairs(s, p)
    if sv.size == 0:
        raise AnalysisError("no positive-influence pairs")
    lo, hi = float(sv.min()), float(sv.max())
    if hi <= lo:
        hi = lo * (1 + 1e-12) + 1e-300
    edges = np.geomspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, sv, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=pv, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return CorrelationCurve(edges, np.sqrt(edges[:-1] * edges[1:]), mean, counts)


def influence_preference_spearman(s, p):
    """Spearman rank correlation of s_ij and p_ij over positive-influence pairs."""
    _, _, sv, pv = influence_pairs(s, p)
    if sv.size < 2:
        raise AnalysisError("need at least two positive-influence pairs")
    return float(sps.spearmanr(sv, pv).statistic)


# --------------------------------------------------------------------------
# ego network


def node_influence(s, mode="received"):
    """Scalar influence per user.

    ``received`` sums each column (total score others assign to the user);
    ``exerted`` sums each row. Row sums of RWR are all one, so ``received`` is
    the default.
    """
    M = _matrix(s)
    if mode == "received":
        return np.asarray(M.sum(axis=0)).ravel()
    if mode == "exerted":
        return np.asarray(M.sum(axis=1)).ravel()
    raise ValueError(f"unknown influence mode {mode!r}")


@dataclass(frozen=True, eq=False)
class EgoNetwork:
    center: int
    nodes: np.ndarray  # center first, then neighbors ascending
    edges: np.ndarray  # induced social edges among ``nodes``
    node_influence: dict
    edge_preference: dict  # center-incident edge -> p of the pair

    @property
    def neighbors(self):
        return self.nodes[1:]

    def write_csv(self, path, user_ids=None):
        ids = (lambda u: u) if user_ids is None else (lambda u: int(user_ids[u]))
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user", "is_center", "influence", "preference_with_center"])
            for u in self.nodes.tolist():
                pref = "" if u == self.center else repr(self._pref_with_center(u))
                w.writerow([ids(u), int(u == self.center), repr(self.node_influence[u]), pref])

    def write_graph(self, path, user_ids=None):
        """Node list with attributes followed by a weighted edge list."""
        ids = (lambda u: u) if user_ids is None else (lambda u: int(user_ids[u]))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# ego network of user {ids(self.center)}\n")
            fh.write("nodes\tid\tinfluence\tcenter\n")
            for u in self.nodes.tolist():
                fh.write(f"node\t{ids(u)}\t{self.node_influence[u]!r}\t{int(u == self.center)}\n")
            fh.write("edges\tsource\ttarget\tpreference\n")
            for a, b in self.edges.tolist():
                w = self.edge_preference.get((a, b))
                fh.write(f"edge\t{ids(a)}\t{ids(b)}\t{'' if w is None else repr(w)}\n")

    def _pref_with_center(self, u):
        return self.edge_preference.get((self.center, u), self.edge_preference.get((u, self.center), 0.0))


def extract_ego(net, s, p=None, mode="received"):
    """Ego network of the most influential user (ties -> lowest index)."""
    values = node_influence(s, mode)
    if values.size == 0:
        raise AnalysisError("empty influence matrix")
    center = int(np.argmax(values))  # first maximum = lowest id
    soc = net.social
    nbrs = np.union1d(soc[soc[:, 0] == center, 1], soc[soc[:, 1] == center, 0])
    nodes = np.concatenate([[center], nbrs]).astype(np.int64)
    member = np.zeros(net.n_users, dtype=bool)
    member[nodes] = True
    edges = soc[member[soc[:, 0]] & member[soc[:, 1]]]
    P = _matrix(p) if p is not None else None
    edge_pref = {}
    for a, b in edges.tolist():
        if center in (a, b):
            edge_pref[(a, b)] = float(P[a, b]) if P is not None else 0.0
    infl = {int(u): float(values[u]) for u in nodes}
    return EgoNetwork(center, nodes, np.ascontiguousarray(edges), infl, edge_pref)


# --------------------------------------------------------------------------
# degree of successfully recommended items


@dataclass(frozen=True)
class DegreeHistogram:
    counts: dict  # training degree -> number of hits
    threshold: int = LOW_DEGREE

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def low_degree_share(self):
        low = sum(n for d, n in self.counts.items() if d <= self.threshold)
        return low / self.total

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["degree", "hits"])
            for d in sorted(self.counts):
                w.writerow([d, self.counts[d]])


def recommended_degree_histogram(lists, test, train, L=None, threshold=LOW_DEGREE):
    """Training degrees of list items that are also in the user's test set."""
    L = lists.L if L is None else L
    Mt = test if isinstance(test, sp.spmatrix) else pairs_matrix(test, train.n_users, train.n_items)
    deg = train.item_degree
    counts = Counter()
    for u in range(lists.items.shape[0]):
        row = lists.items[u, :L]
        row = row[row >= 0]
        held = Mt.indices[Mt.indptr[u]:Mt.indptr[u + 1]]
        for j in row[np.isin(row, held)].tolist():
            counts[int(deg[j])] += 1
    if not counts:
        raise AnalysisError("no successfully recommended items")
    return DegreeHistogram(dict(sorted(counts.items())), threshold)
