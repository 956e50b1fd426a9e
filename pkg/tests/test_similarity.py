import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csnfilter.network import CoupledNetwork
from csnfilter.similarity import (
    ConvergenceError,
    DanglingNodeError,
    InfluenceKind,
    cosine_preference,
    lin_influence,
    lout_influence,
    read_scores,
    rwr_influence,
    write_scores,
)

from conftest import random_network, strongly_connected_network


def dense_rwr(net, c):
    """Oracle: direct solve of (I - cW) X = (1 - c) I, rows = sources."""
    m = net.n_users
    T = net.T.toarray()
    W = (T / T.sum(axis=1, keepdims=True)).T
    X = np.linalg.solve(np.eye(m) - c * W, (1 - c) * np.eye(m))
    return X.T


def brute_tanimoto(A, B, rooted=True):
    """Oracle over explicit neighbor sets."""
    common = len(A & B)
    if common == 0:
        return 0.0
    ka, kb = len(A), len(B)
    denom = (math.sqrt(ka) + math.sqrt(kb) - common) if rooted else (ka + kb - common)
    return 1.0 if denom <= common else common / denom


def in_sets(net):
    sets = [set() for _ in range(net.n_users)]
    for a, b in net.social.tolist():
        sets[b].add(a)
    return sets


def out_sets(net):
    sets = [set() for _ in range(net.n_users)]
    for a, b in net.social.tolist():
        sets[a].add(b)
    return sets


def permuted(net, perm):
    social = perm[net.social]
    behavior = np.column_stack([perm[net.behavior[:, 0]], net.behavior[:, 1]])
    return CoupledNetwork.from_edges(social, behavior, net.n_users, net.n_items)


# --- RWR


def test_rwr_two_cycle():
    net = CoupledNetwork.from_edges([(0, 1), (1, 0)], [(0, 0)], 2, 1)
    s = rwr_influence(net, c=0.5).toarray()
    np.testing.assert_allclose(s[0], [2 / 3, 1 / 3], atol=1e-9)
    np.testing.assert_allclose(s[1], [1 / 3, 2 / 3], atol=1e-9)


def test_rwr_c_zero_is_identity(rng):
    net = random_network(rng)
    np.testing.assert_array_equal(rwr_influence(net, c=0.0).toarray(), np.eye(net.n_users))


def test_rwr_positive_on_strongly_connected(rng):
    for _ in range(5):
        net = strongly_connected_network(rng, 20)
        s = rwr_influence(net, c=0.85).toarray()
        assert (s > 0).all()


@pytest.mark.parametrize("c", [0.3, 0.5, 0.85])
def test_rwr_matches_dense_solve(rng, c):
    net = random_network(rng, m=30)
    s = rwr_influence(net, c=c)
    np.testing.assert_allclose(s.toarray(), dense_rwr(net, c), atol=1e-8, rtol=0)
    np.testing.assert_allclose(s.toarray().sum(axis=1), 1.0, atol=1e-9)
    assert s.kind is InfluenceKind.RWR and s.c == c


def test_rwr_is_asymmetric_on_directed_graph():
    net = CoupledNetwork.from_edges([(0, 1), (1, 2), (2, 0), (0, 2)], [(0, 0)], 3, 1)
    s = rwr_influence(net, c=0.85).toarray()
    assert not np.allclose(s, s.T)


def test_rwr_dangling_node():
    net = CoupledNetwork.from_edges([(0, 1)], [(0, 0)], 2, 1)
    with pytest.raises(DanglingNodeError):
        rwr_influence(net)


def test_rwr_non_convergence_reports_residual(rng):
    with pytest.raises(ConvergenceError) as err:
        rwr_influence(random_network(rng), c=0.85, max_iters=3)
    assert err.value.residual > 0


@pytest.mark.parametrize("c", [-0.1, 1.0])
def test_rwr_rejects_c(rng, c):
    with pytest.raises(ValueError):
        rwr_influence(random_network(rng), c=c)


# --- LIN / LOUT


def _in_example():
    # users: i=0, j=1, a=2, b=3, d=4; i <- {a, b}, j <- {b, d}
    return CoupledNetwork.from_edges([(2, 0), (3, 0), (3, 1), (4, 1)], [(0, 0)], 5, 1)


def test_lin_partial_overlap():
    s = lin_influence(_in_example()).toarray()
    expected = 1 / (math.sqrt(2) + math.sqrt(2) - 1)
    assert s[0, 1] == pytest.approx(expected, abs=1e-12)
    assert s[0, 1] == pytest.approx(0.5469, abs=1e-4)


def test_lout_partial_overlap():
    # i follows {x, y}, j follows {y, z}
    net = CoupledNetwork.from_edges([(0, 2), (0, 3), (1, 3), (1, 4)], [(0, 0)], 5, 1)
    s = lout_influence(net).toarray()
    assert s[0, 1] == pytest.approx(1 / (2 * math.sqrt(2) - 1), abs=1e-12)


def test_lin_identical_in_neighborhoods_is_one():
    # users 0 and 1 are each followed by 2, 3, 4, 5
    social = [(f, t) for f in range(2, 6) for t in (0, 1)]
    s = lin_influence(CoupledNetwork.from_edges(social, [(0, 0)], 6, 1)).toarray()
    assert s[0, 1] == 1.0


def test_lout_identical_out_neighborhoods_is_one():
    social = [(f, t) for f in (0, 1) for t in range(2, 6)]
    s = lout_influence(CoupledNetwork.from_edges(social, [(0, 0)], 6, 1)).toarray()
    assert s[0, 1] == 1.0


def test_lin_disjoint_is_zero():
    net = CoupledNetwork.from_edges([(2, 0), (3, 1)], [(0, 0)], 4, 1)
    assert lin_influence(net).toarray()[0, 1] == 0.0


def test_classic_tanimoto_flag():
    s = lin_influence(_in_example(), classic_tanimoto=True).toarray()
    assert s[0, 1] == pytest.approx(1 / 3)


def test_rooted_saturates_at_one():
    # overlap 2 of in-degree 2 each: rooted ratio 2 / (2*sqrt(2) - 2) > 1
    social = [(2, 0), (3, 0), (2, 1), (3, 1), (4, 1)]
    s = lin_influence(CoupledNetwork.from_edges(social, [(0, 0)], 5, 1)).toarray()
    assert s[0, 1] == pytest.approx(brute_tanimoto({2, 3}, {2, 3, 4}))
    assert s.max() <= 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), classic=st.booleans())
def test_tanimoto_matches_brute_force(seed, classic):
    net = random_network(np.random.default_rng(seed), m=10)
    lin = lin_influence(net, classic).toarray()
    lout = lout_influence(net, classic).toarray()
    ins, outs = in_sets(net), out_sets(net)
    for i in range(net.n_users):
        for j in range(net.n_users):
            assert lin[i, j] == pytest.approx(brute_tanimoto(ins[i], ins[j], not classic), abs=1e-12)
            assert lout[i, j] == pytest.approx(brute_tanimoto(outs[i], outs[j], not classic), abs=1e-12)


# --- cosine


def test_cosine_examples():
    # 0: {a,b,c}, 1: {b,c,d}, 2: {a,b,c}, 3: {e}
    behavior = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (2, 2), (3, 4)]
    net = CoupledNetwork.from_edges([(0, 1)], behavior, 4, 5)
    p = cosine_preference(net).toarray()
    assert p[0, 1] == pytest.approx(2 / 3)
    assert p[0, 2] == 1.0
    assert p[0, 3] == 0.0
    assert np.array_equal(np.diag(p), np.ones(4))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_cosine_matches_dense(seed):
    net = random_network(np.random.default_rng(seed))
    R = net.R.toarray()
    norms = np.sqrt((R**2).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        expected = np.nan_to_num(R @ R.T / np.outer(norms, norms))
    p = cosine_preference(net).toarray()
    np.testing.assert_allclose(p, expected, atol=1e-12)
    has = net.user_item_degree > 0
    assert np.all(np.diag(p)[has] == 1.0)
    assert p.max() <= 1.0


# --- structural properties


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_lin_is_lout_of_reverse(seed):
    net = random_network(np.random.default_rng(seed))
    a = lin_influence(net).toarray()
    b = lout_influence(net.reversed_social()).toarray()
    np.testing.assert_array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    perm = rng.permutation(net.n_users)
    other = permuted(net, perm)
    inv = np.argsort(perm)
    for fn in (lin_influence, lout_influence, cosine_preference):
        a = fn(net).toarray()
        b = fn(other).toarray()[np.ix_(perm, perm)]
        np.testing.assert_allclose(a, b, atol=1e-12)
    a = rwr_influence(net, c=0.7).toarray()
    b = rwr_influence(other, c=0.7).toarray()[np.ix_(perm, perm)]
    np.testing.assert_allclose(a, b, atol=1e-9)
    assert inv[perm].tolist() == list(range(net.n_users))


def test_score_file_roundtrip(tmp_path, rng):
    net = random_network(rng)
    s = lin_influence(net)
    ids = np.arange(100, 100 + net.n_users)
    write_scores(tmp_path / "lin.tsv", s, ids)
    back = read_scores(tmp_path / "lin.tsv", ids)
    np.testing.assert_array_equal(back.toarray(), s.toarray())
