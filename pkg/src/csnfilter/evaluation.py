"""Precision / recall / F-measure, sampled AUC and (alpha, beta) grid sweeps."""

from __future__ import annotations

import csv
import json
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import kernels
from .recommender import cf_scores, hybrid_similarity, top_l_lists
from .similarity import DEFAULT_C, InfluenceKind, cosine_preference, influence

log = logging.getLogger(__name__)

DEFAULT_AUC_SAMPLES = 10**6
METRICS = ("precision", "recall", "fmeasure", "auc")


class EvaluationError(ValueError):
    pass


class PRF(NamedTuple):
    precision: float
    recall: float
    fmeasure: float
    n_users: int


@dataclass(frozen=True)
class EvaluationReport:
    precision: float
    recall: float
    fmeasure: float
    auc: float
    L: int
    alpha: float
    beta: float
    kind: str
    seed: int

    def to_dict(self):
        return asdict(self)


def pairs_matrix(pairs, n_users, n_items):
    """CSR indicator matrix of (user, item) pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    M = sp.csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_users, n_items))
    M.sum_duplicates()
    M.sort_indices()
    return M


def per_user_prf(lists, test, L=None, backend=None):
    """Per-user hits, P_i, R_i, F_i and the mask of users with test items."""
    L = lists.L if L is None else L
    n_users = lists.items.shape[0]
    if isinstance(test, sp.spmatrix):
        Mt = test
    else:
        test = np.asarray(test, dtype=np.int64).reshape(-1, 2)
        n_items = max(int(lists.items.max(initial=-1)), int(test[:, 1].max(initial=-1))) + 1
        Mt = pairs_matrix(test, n_users, n_items)
    n_p = np.diff(Mt.indptr)
    k = kernels.get_backend(backend)
    hits = k.count_hits(np.ascontiguousarray(lists.items), Mt.indptr, Mt.indices, int(L))
    has_test = n_p > 0
    P = hits / L
    R = np.divide(hits, n_p, out=np.zeros(n_users), where=has_test)
    denom = P + R
    F = np.divide(2 * P * R, denom, out=np.zeros(n_users), where=denom > 0)
    return hits, P, R, F, has_test


def precision_recall_f(lists, test, L=None, strict_mean_over_all_users=False, backend=None):
    """System P, R, F averaged over users with at least one test item.

    With ``strict_mean_over_all_users`` the sums are divided by the total
    number of users instead.
    """
    hits, P, R, F, has_test = per_user_prf(lists, test, L, backend)
    n = len(P) if strict_mean_over_all_users else int(has_test.sum())
    if not has_test.any():
        raise EvaluationError("empty test set")
    # fsum is exactly rounded, so the means do not depend on summation order
    mask = has_test
    return PRF(math.fsum(P[mask]) / n, math.fsum(R[mask]) / n, math.fsum(F[mask]) / n, n)


# --------------------------------------------------------------------------
# AUC


@dataclass(frozen=True, eq=False)
class AucSample:
    users: np.ndarray
    pos: np.ndarray
    neg: np.ndarray
    seed: int

    def __len__(self):
        return len(self.users)


def _known_codes(train, test_m):
    n = train.n_items
    tb = train.behavior
    tc = test_m.tocoo()
    codes = np.concatenate([tb[:, 0] * n + tb[:, 1], tc.row.astype(np.int64) * n + tc.col])
    return np.unique(codes)


def sample_auc(train, test, n=DEFAULT_AUC_SAMPLES, seed=0, max_rounds=64):
    """Draw ``n`` (user, test item, negative item) triples.

    The (user, test item) pair is uniform over test pairs whose user has at
    least one item outside its train and test sets; the negative is uniform
    over those outside items.
    """
    if n < 1:
        raise ValueError("AUC sample count must be >= 1")
    m, n_items = train.n_users, train.n_items
    test_m = test if isinstance(test, sp.spmatrix) else pairs_matrix(test, m, n_items)
    if test_m.nnz == 0:
        raise EvaluationError("empty test set")
    known = _known_codes(train, test_m)
    n_known = np.bincount(known // n_items, minlength=m)
    eligible = n_items - n_known
    tc = test_m.tocoo()
    pairs_u = tc.row.astype(np.int64)
    pairs_i = tc.col.astype(np.int64)
    order = np.lexsort((pairs_i, pairs_u))
    pairs_u, pairs_i = pairs_u[order], pairs_i[order]
    ok = eligible[pairs_u] > 0
    if not ok.any():
        raise EvaluationError("no user has an eligible negative item")
    pairs_u, pairs_i = pairs_u[ok], pairs_i[ok]

    rng = np.random.default_rng(seed)
    pick = rng.integers(0, len(pairs_u), size=n)
    users, pos = pairs_u[pick], pairs_i[pick]
    neg = rng.integers(0, n_items, size=n)
    bad = np.flatnonzero(np.isin(users * n_items + neg, known))
    rounds = 0
    while bad.size and rounds < max_rounds:
        neg[bad] = rng.integers(0, n_items, size=bad.size)
        bad = bad[np.isin(users[bad] * n_items + neg[bad], known)]
        rounds += 1
    for t in bad:  # users whose known set covers almost every item
        u = users[t]
        held = known[(known >= u * n_items) & (known < (u + 1) * n_items)] - u * n_items
        free = np.setdiff1d(np.arange(n_items), held)
        neg[t] = free[rng.integers(0, len(free))]
    return AucSample(users, pos, neg, int(seed))


def auc_from_sample(scores, sample, backend=None):
    k = kernels.get_backend(backend)
    greater, ties = k.auc_tally(np.ascontiguousarray(scores, dtype=np.float64),
                                sample.users, sample.pos, sample.neg)
    return (greater + 0.5 * ties) / len(sample)


def auc(scores, train, test, n=DEFAULT_AUC_SAMPLES, seed=0, backend=None):
    """Sampled AUC: ``(n' + 0.5 n'') / n``."""
    return auc_from_sample(scores, sample_auc(train, test, n, seed), backend)


def auc_exact(scores, train, test):
    """Expectation of the sampled AUC, with ties counted analytically."""
    m, n_items = train.n_users, train.n_items
    test_m = test if isinstance(test, sp.spmatrix) else pairs_matrix(test, m, n_items)
    R = train.R
    total, weight = 0.0, 0
    for u in range(m):
        pos = test_m.indices[test_m.indptr[u]:test_m.indptr[u + 1]]
        if pos.size == 0:
            continue
        mask = np.ones(n_items, dtype=bool)
        mask[pos] = False
        mask[R.indices[R.indptr[u]:R.indptr[u + 1]]] = False
        negs = np.sort(scores[u, mask])
        if negs.size == 0:
            continue
        p = scores[u, pos]
        below = np.searchsorted(negs, p, side="left")
        upto = np.searchsorted(negs, p, side="right")
        total += float(((below + 0.5 * (upto - below)) / negs.size).sum())
        weight += pos.size
    if weight == 0:
        raise EvaluationError("no user has an eligible negative item")
    return total / weight


# --------------------------------------------------------------------------
# single-point evaluation


def evaluate(split, preference, influence_matrix, alpha, beta, L_values=(10,), kind="rwr",
             auc_samples=DEFAULT_AUC_SAMPLES, auc_sample=None, transpose_influence=False,
             strict_mean_over_all_users=False, backend=None):
    """Reports for one (alpha, beta) point, one per list length."""
    train = split.train
    test_m = split.test_matrix
    S = hybrid_similarity(preference, influence_matrix, alpha, beta, transpose_influence)
    scores = cf_scores(train, S)
    lists = top_l_lists(train, scores, max(L_values), backend=backend)
    if auc_sample is None and auc_samples:
        auc_sample = sample_auc(train, test_m, auc_samples, split.seed)
    a = auc_from_sample(scores, auc_sample, backend) if auc_sample is not None else float("nan")
    reports = []
    for L in L_values:
        prf = precision_recall_f(lists, test_m, L, strict_mean_over_all_users, backend)
        reports.append(EvaluationReport(prf.precision, prf.recall, prf.fmeasure, a, int(L),
                                        float(alpha), float(beta), str(InfluenceKind(kind)),
                                        split.seed))
    return reports


# --------------------------------------------------------------------------
# grid sweep


def grid_values(lo, hi, step):
    """Inclusive lattice ``lo, lo+step, ..., hi`` rounded to 10 decimals."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + k * step, 10) for k in range(count))


@dataclass
class GridResult:
    kind: str
    alphas: tuple
    betas: tuple
    L_values: tuple
    seed: int
    reports: dict = field(default_factory=dict)  # (alpha, beta, L) -> EvaluationReport

    def value(self, metric, alpha, beta, L):
        return getattr(self.reports[(alpha, beta, L)], metric)

    def best(self, metric, L=None, where=None):
        """``(alpha, beta, value)`` of the maximum; first in grid order wins ties."""
        L = self.L_values[0] if L is None else L
        best = None
        for a in self.alphas:
            for b in self.betas:
                if where is not None and not where(a, b):
                    continue
                v = self.value(metric, a, b, L)
                if np.isnan(v):
                    continue
                if best is None or v > best[2]:
                    best = (a, b, v)
        return best

    def rows(self):
        for a in self.alphas:
            for b in self.betas:
                for L in self.L_values:
                    rep = self.reports[(a, b, L)]
                    for metric in METRICS:
                        yield a, b, L, metric, getattr(rep, metric)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "beta", "L", "metric", "value"])
            for a, b, L, metric, v in self.rows():
                w.writerow([repr(a), repr(b), L, metric, repr(float(v))])

    def summary(self):
        """Per-metric optimum per L (AUC does not depend on L)."""
        out = {"kind": self.kind, "seed": self.seed, "grid": {
            "alpha": list(self.alphas), "beta": list(self.betas), "L": list(self.L_values)}}
        for metric in ("precision", "recall", "fmeasure"):
            out[metric] = {}
            for L in self.L_values:
                a, b, v = self.best(metric, L)
                out[metric][str(L)] = {"value": v, "alpha": a, "beta": b}
        best_auc = self.best("auc", self.L_values[0])
        out["auc"] = None if best_auc is None else {
            "value": best_auc[2], "alpha": best_auc[0], "beta": best_auc[1]}
        return out

    def write_summary(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def grid_sweep(split, kind="rwr", alpha_range=(0.0, 4.0), beta_range=(0.0, 4.0), step=0.2,
               L_values=(10, 20, 50), c=DEFAULT_C, auc_samples=DEFAULT_AUC_SAMPLES,
               preference=None, influence_matrix=None, transpose_influence=False,
               strict_mean_over_all_users=False, workers=1, backend=None):
    """Evaluate every (alpha, beta) lattice point for every L.

    The similarity matrices and the AUC sample are computed once and shared
    by all points. Results are keyed by grid point, so ``workers > 1`` does
    not change them.
    """
    kind = InfluenceKind(kind)
    train = split.train
    if preference is None:
        preference = cosine_preference(train)
    if influence_matrix is None:
        influence_matrix = influence(train, kind, c=c)
    alphas = grid_values(*alpha_range, step)
    betas = grid_values(*beta_range, step)
    L_values = tuple(int(L) for L in L_values)
    sample = sample_auc(train, split.test_matrix, auc_samples, split.seed) if auc_samples else None
    p_dense = preference.toarray()
    s_dense = influence_matrix.toarray()
    points = [(a, b) for a in alphas for b in betas]

    def run(point):
        a, b = point
        return evaluate(split, p_dense, s_dense, a, b, L_values, kind, auc_sample=sample,
                        auc_samples=0, transpose_influence=transpose_influence,
                        strict_mean_over_all_users=strict_mean_over_all_users, backend=backend)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(pt) for pt in points]
    grid = GridResult(str(kind), alphas, betas, L_values, split.seed)
    for (a, b), reps in zip(points, results):
        for rep in reps:
            grid.reports[(a, b, rep.L)] = rep
    log.info("swept %d grid points (%s)", len(points), kind)
    return grid
