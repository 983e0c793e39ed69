import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmca.exceptions import NumericalError, ShapeError, WeightError
from mmca.linalg import block_center, constrained_svd, row_center, thin_svd, weighted_gsvd


def test_thin_svd_identity():
    r = thin_svd(np.eye(2))
    np.testing.assert_allclose(r.phi, [1.0, 1.0])
    np.testing.assert_allclose(r.reconstruct(), np.eye(2), atol=1e-15)


def test_thin_svd_rank_one():
    r = thin_svd(np.ones((2, 2)))
    np.testing.assert_allclose(r.phi, [2.0, 0.0])
    np.testing.assert_allclose(r.P[:, 0], [np.sqrt(0.5)] * 2)
    assert r.rank == 1


def test_thin_svd_zero_matrix():
    r = thin_svd(np.zeros((3, 2)))
    np.testing.assert_array_equal(r.phi, 0.0)
    assert r.rank == 0


def test_thin_svd_empty():
    r = thin_svd(np.zeros((0, 3)))
    assert r.phi.size == 0


def test_thin_svd_non_finite():
    with pytest.raises(NumericalError):
        thin_svd(np.array([[1.0, np.nan]]))


def test_thin_svd_sign_convention(rng):
    M = rng.standard_normal((7, 4))
    r = thin_svd(M)
    idx = np.argmax(np.abs(r.P), axis=0)
    assert np.all(r.P[idx, np.arange(4)] > 0)
    r2 = thin_svd(M.copy())
    np.testing.assert_array_equal(r.P, r2.P)


def test_row_center_example():
    np.testing.assert_allclose(row_center([[1, 2], [3, 4]]), [[-1, -1], [1, 1]])


def test_block_center_example():
    out = block_center([[1, 2, 3, 4, 5]], (2, 3))
    np.testing.assert_allclose(out, [[-0.5, 0.5, -1.0, 0.0, 1.0]])


def test_block_center_shape_mismatch():
    with pytest.raises(ShapeError):
        block_center(np.zeros((2, 4)), (2, 3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=4), st.integers(1, 8), st.integers(0, 2**31))
def test_centering_is_idempotent(blocks, n, seed):
    M = np.random.default_rng(seed).standard_normal((n, sum(blocks)))
    once = block_center(row_center(M), blocks)
    np.testing.assert_allclose(block_center(row_center(once), blocks), once, atol=1e-12)
    np.testing.assert_allclose(once.sum(axis=0), 0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10)))
def test_gsvd_with_unit_weights_matches_svd(M):
    a = weighted_gsvd(M, 1.0, 1.0)
    b = thin_svd(M)
    np.testing.assert_array_equal(a.phi, b.phi)
    np.testing.assert_allclose(a.reconstruct(), M, atol=1e-9)


def test_gsvd_metric_orthonormality(rng):
    M = rng.standard_normal((9, 5))
    r = rng.uniform(0.1, 2, 9)
    c = rng.uniform(0.1, 2, 5)
    s = weighted_gsvd(M, r, c)
    np.testing.assert_allclose(s.P.T @ (r[:, None] * s.P), np.eye(5), atol=1e-10)
    np.testing.assert_allclose(s.Q.T @ (c[:, None] * s.Q), np.eye(5), atol=1e-10)
    np.testing.assert_allclose(s.reconstruct(), M, atol=1e-10)


def test_gsvd_scalar_weight_scaling(rng):
    # Oracle: with scalar weights a, b the singular values scale by sqrt(a b).
    M = rng.standard_normal((6, 4))
    base = thin_svd(M).phi
    np.testing.assert_allclose(weighted_gsvd(M, 4.0, 0.25).phi, base, rtol=1e-12)
    np.testing.assert_allclose(weighted_gsvd(M, 9.0, 1.0).phi, 3 * base, rtol=1e-12)


@pytest.mark.parametrize("w", [0.0, -1.0, np.nan])
def test_gsvd_rejects_bad_weights(w):
    with pytest.raises(WeightError):
        weighted_gsvd(np.ones((2, 2)), [1.0, w], 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 5), min_size=1, max_size=4), st.integers(2, 15), st.integers(0, 2**31))
def test_constrained_svd_invariants(blocks, n, seed):
    M = np.random.default_rng(seed).standard_normal((n, sum(blocks)))
    s = constrained_svd(M, blocks)
    r = min(n - 1, sum(blocks) - len(blocks))
    assert s.phi.shape == (r,)
    assert np.all(np.diff(s.phi) <= 1e-12)
    np.testing.assert_allclose(s.P.T @ s.P, np.eye(r), atol=1e-10)
    np.testing.assert_allclose(s.Q.T @ s.Q, np.eye(r), atol=1e-10)
    np.testing.assert_allclose(s.P.sum(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(block_center(s.Q.T, blocks), s.Q.T, atol=1e-10)
    target = block_center(row_center(M), blocks)
    np.testing.assert_allclose(s.reconstruct(), target, atol=1e-9)
    # Singular values agree with a plain SVD of the doubly centered matrix.
    np.testing.assert_allclose(s.phi, thin_svd(target).phi[:r], atol=1e-9)


def test_constrained_svd_null_vectors_satisfy_constraints():
    # Rank-one input: the remaining vectors are still constrained and orthonormal.
    M = np.zeros((6, 5))
    M[:3, 0] = 1.0
    s = constrained_svd(M, (2, 3))
    assert s.rank == 1
    np.testing.assert_allclose(s.P.sum(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(s.Q[:2].sum(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(s.Q[2:].sum(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(s.Q.T @ s.Q, np.eye(3), atol=1e-12)


def test_constrained_svd_row_permutation_invariance(rng):
    M = rng.standard_normal((10, 7))
    perm = rng.permutation(10)
    a = constrained_svd(M, (3, 4))
    b = constrained_svd(M[perm], (3, 4))
    np.testing.assert_allclose(a.phi, b.phi, atol=1e-12)
