"""Social-influence (RWR, LIN, LOUT) and cosine-preference user-pair scores."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

DEFAULT_C = 0.85
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000
DROP_BELOW = 1e-12


class InfluenceKind(str, enum.Enum):
    RWR = "rwr"
    LIN = "lin"
    LOUT = "lout"

    def __str__(self):
        return self.value


class ConvergenceError(RuntimeError):
    def __init__(self, iters, residual):
        self.iters, self.residual = iters, residual
        super().__init__(f"RWR did not converge in {iters} iterations (residual {residual:.3e})")


class DanglingNodeError(ValueError):
    """A user without out-links; the input was not purified."""


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Row ``i`` holds the influence scores ``s_ij`` of user i on every j."""

    kind: InfluenceKind
    scores: sp.csr_matrix
    c: float | None = None

    @property
    def n_users(self):
        return self.scores.shape[0]

    def toarray(self):
        return self.scores.toarray()


@dataclass(frozen=True, eq=False)
class PreferenceMatrix:
    scores: sp.csr_matrix

    @property
    def n_users(self):
        return self.scores.shape[0]

    def toarray(self):
        return self.scores.toarray()


def _sparsify(dense, drop_below=DROP_BELOW):
    dense = np.where(dense >= drop_below, dense, 0.0)
    out = sp.csr_matrix(dense)
    out.sort_indices()
    return out


def walk_operator(net):
    """Column-stochastic walk matrix: ``W[l, j] = 1/k_j`` for each edge j -> l."""
    k = net.out_degree
    if (k == 0).any():
        bad = np.flatnonzero(k == 0)
        raise DanglingNodeError(f"{len(bad)} user(s) without out-links, e.g. index {bad[0]}")
    P = sp.diags(1.0 / k) @ net.T  # row-stochastic
    return sp.csr_matrix(P.T)


def rwr_influence(net, c=DEFAULT_C, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS):
    """Random walk with restart from every user.

    Iterates ``X <- c W X + (1 - c) I`` from ``X = I`` (column i is the walk
    started at i) until the max-abs change is at most ``tol``. Each column is
    a probability vector at every step. Returns the transpose, so row i of
    the result is user i's stationary visit distribution.
    """
    if not 0.0 <= c < 1.0:
        raise ValueError(f"restart complement c must be in [0, 1), got {c}")
    W = walk_operator(net)
    m = net.n_users
    eye = np.eye(m)
    X = eye.copy()
    restart = (1.0 - c) * eye
    residual = np.inf
    for it in range(1, max_iters + 1):
        X_new = c * (W @ X) + restart
        residual = float(np.abs(X_new - X).max()) if m else 0.0
        X = X_new
        if residual <= tol:
            log.debug("RWR converged in %d iterations (c=%g)", it, c)
            break
    else:
        raise ConvergenceError(max_iters, residual)
    return InfluenceMatrix(InfluenceKind.RWR, _sparsify(X.T), float(c))


def _rooted_tanimoto(overlap, degree, classic):
    overlap = sp.csr_matrix(overlap)
    overlap.sort_indices()
    coo = overlap.tocoo()
    common = coo.data
    ki = degree[coo.row].astype(np.float64)
    kj = degree[coo.col].astype(np.float64)
    if classic:
        denom = ki + kj - common
    else:
        denom = np.sqrt(ki) + np.sqrt(kj) - common
    # saturate at 1: zero/negative denominators and ratios above 1 both arise
    # only for heavily overlapping neighborhoods
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > common, common / np.where(denom > 0, denom, 1.0), 1.0)
    out = sp.csr_matrix((vals, (coo.row, coo.col)), shape=overlap.shape)
    out.sort_indices()
    return out


def lin_influence(net, classic_tanimoto=False):
    """Tanimoto overlap of in-linkers: common / (sqrt(k_i^in) + sqrt(k_j^in) - common)."""
    T = net.T
    overlap = (T.T @ T).tocsr()
    overlap.eliminate_zeros()
    return InfluenceMatrix(InfluenceKind.LIN, _rooted_tanimoto(overlap, net.in_degree, classic_tanimoto))


def lout_influence(net, classic_tanimoto=False):
    """Tanimoto overlap of out-linkees; LIN on the reversed graph."""
    T = net.T
    overlap = (T @ T.T).tocsr()
    overlap.eliminate_zeros()
    return InfluenceMatrix(InfluenceKind.LOUT, _rooted_tanimoto(overlap, net.out_degree, classic_tanimoto))


def cosine_preference(net):
    """Cosine similarity of users' binary item vectors."""
    R = net.R
    overlap = (R @ R.T).tocsr()
    overlap.eliminate_zeros()
    coo = overlap.tocoo()
    d = net.user_item_degree.astype(np.float64)
    # sqrt of the exact integer product keeps p_ii == 1 and p_ij <= 1
    vals = coo.data / np.sqrt(d[coo.row] * d[coo.col])
    out = sp.csr_matrix((vals, (coo.row, coo.col)), shape=overlap.shape)
    out.sort_indices()
    return PreferenceMatrix(out)


def influence(net, kind, c=DEFAULT_C, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
              classic_tanimoto=False):
    kind = InfluenceKind(kind)
    if kind is InfluenceKind.RWR:
        return rwr_influence(net, c=c, tol=tol, max_iters=max_iters)
    if kind is InfluenceKind.LIN:
        return lin_influence(net, classic_tanimoto)
    return lout_influence(net, classic_tanimoto)


def write_scores(path, matrix, user_ids=None):
    """Write non-zero pair scores as ``i<TAB>j<TAB>score`` lines."""
    coo = matrix.scores.tocoo() if hasattr(matrix, "scores") else sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    rows, cols, vals = coo.row[order], coo.col[order], coo.data[order]
    if user_ids is not None:
        rows, cols = np.asarray(user_ids)[rows], np.asarray(user_ids)[cols]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# i\tj\tscore\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"{i}\t{j}\t{v!r}\n")


def read_scores(path, user_ids=None):
    """Inverse of :func:`write_scores`; returns a CSR matrix over ``user_ids``."""
    data = np.loadtxt(path, dtype=np.float64, comments="#", ndmin=2)
    if user_ids is None:
        m = int(data[:, :2].max()) + 1 if len(data) else 0
        rows, cols = data[:, 0].astype(np.int64), data[:, 1].astype(np.int64)
    else:
        user_ids = np.asarray(user_ids)
        m = len(user_ids)
        rows = np.searchsorted(user_ids, data[:, 0].astype(np.int64))
        cols = np.searchsorted(user_ids, data[:, 1].astype(np.int64))
    return sp.csr_matrix((data[:, 2], (rows, cols)), shape=(m, m))
