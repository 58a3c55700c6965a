import numpy as np
import pytest
import scipy.sparse as sp

from conftest import gapped_sparse_matrix, random_orthonormal, subspace_angle_sin
from popsi.linalg import (
    ORTHO_TOL,
    SvdOptions,
    orthonormalize,
    project_out,
    spmm,
    spmm_t,
    truncated_svd_left,
)


def test_svd_diagonal_matrix():
    A = sp.csr_matrix(np.diag([3.0, 2.0, 1.0]))
    Q = truncated_svd_left(A, SvdOptions(rank=2))
    # columns equal +-e1, +-e2
    assert np.allclose(np.abs(Q), np.eye(3)[:, :2], atol=1e-12)


def test_svd_identity_full_rank():
    A = sp.identity(4, format="csr")
    Q = truncated_svd_left(A, SvdOptions(rank=4))
    assert np.max(np.abs(Q @ Q.T - np.eye(4))) <= 1e-10


def test_svd_matches_dense_oracle():
    rng = np.random.default_rng(5)
    A = gapped_sparse_matrix(rng, 50, 80, r=5)
    Q = truncated_svd_left(A, SvdOptions(rank=5, rng_seed=1))
    ref = np.linalg.svd(A.toarray(), full_matrices=False)[0][:, :5]
    assert subspace_angle_sin(Q, ref) <= 1e-8


def test_svd_rank_too_large():
    A = sp.identity(4, format="csr")
    with pytest.raises(ValueError):
        truncated_svd_left(A, SvdOptions(rank=5))


def test_svd_empty_matrix():
    A = sp.csr_matrix((4, 4))
    with pytest.raises(ValueError):
        truncated_svd_left(A, SvdOptions(rank=2))


def test_svd_deterministic():
    rng = np.random.default_rng(9)
    A = gapped_sparse_matrix(rng, 30, 40, r=4)
    opts = SvdOptions(rank=4, rng_seed=77)
    Q1 = truncated_svd_left(A, opts)
    Q2 = truncated_svd_left(A, opts)
    assert np.array_equal(Q1, Q2)


def test_project_out_group_mean():
    P = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]))
    h = np.array([[3.0], [1.0], [5.0]])
    out = project_out(h, P)
    assert np.allclose(out.ravel(), [0.0, -2.0, 2.0], atol=1e-12)


def test_project_out_fixed_point():
    rng = np.random.default_rng(0)
    P = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]))
    # h orthogonal to both columns of P: zero group sums
    h = np.array([[0.0], [1.0], [-1.0]])
    assert np.allclose(project_out(h, P), h, atol=1e-14)


def test_project_out_idempotent():
    rng = np.random.default_rng(3)
    P = sp.csr_matrix((np.ones(20), (np.arange(20), rng.integers(0, 2, 20))), shape=(20, 2))
    H = rng.standard_normal((20, 5))
    once = project_out(H, P)
    twice = project_out(once, P)
    assert np.max(np.abs(twice - once)) <= 1e-12


def test_project_out_empty_columns_identity():
    P = sp.csr_matrix((5, 2))
    H = np.random.default_rng(1).standard_normal((5, 3))
    assert np.array_equal(project_out(H, P), H)


def test_project_out_row_mismatch():
    P = sp.csr_matrix((4, 2))
    with pytest.raises(ValueError):
        project_out(np.zeros((5, 2)), P)


def test_orthonormalize_axis_columns():
    H = np.array([[2.0, 0.0], [0.0, 0.0], [0.0, 3.0]])
    Q = orthonormalize(H)
    assert Q.shape == (3, 2)
    # span is {e1, e3}; column order is free
    assert np.allclose(Q @ Q.T, np.diag([1.0, 0.0, 1.0]), atol=1e-12)


def test_orthonormalize_drops_duplicate_column():
    rng = np.random.default_rng(2)
    col = rng.standard_normal((10, 1))
    Q = orthonormalize(np.hstack([col, col]))
    assert Q.shape == (10, 1)


def test_orthonormalize_preserves_span():
    rng = np.random.default_rng(4)
    H = rng.standard_normal((100, 8))
    Q = orthonormalize(H)
    assert np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))) <= ORTHO_TOL
    assert np.max(np.abs(Q @ (Q.T @ H) - H)) <= 1e-10


def test_orthonormalize_rejects_zero():
    with pytest.raises(ValueError):
        orthonormalize(np.zeros((4, 2)))


def test_spmm_oracle():
    rng = np.random.default_rng(6)
    A = sp.random(20, 30, density=0.2, random_state=8, format="csr")
    B = rng.standard_normal((30, 4))
    assert np.max(np.abs(spmm(A, B) - A.toarray() @ B)) <= 1e-12
    C = rng.standard_normal((20, 4))
    assert np.max(np.abs(spmm_t(A, C) - A.toarray().T @ C)) <= 1e-12


def test_spmm_zero_and_identity():
    B = np.random.default_rng(7).standard_normal((5, 3))
    assert np.all(spmm(sp.csr_matrix((4, 5)), B) == 0)
    assert np.allclose(spmm(sp.identity(5, format="csr"), B), B)


def test_spmm_dimension_mismatch():
    with pytest.raises(ValueError):
        spmm(sp.csr_matrix((4, 5)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        spmm_t(sp.csr_matrix((4, 5)), np.zeros((5, 2)))


def test_projector_self_adjoint_probe():
    rng = np.random.default_rng(11)
    P = sp.csr_matrix((np.ones(30), (np.arange(30), rng.integers(0, 2, 30))), shape=(30, 2))
    x = rng.standard_normal((30, 1))
    y = rng.standard_normal((30, 1))
    # <proj x, y> == <x, proj y>
    lhs = (project_out(x, P).T @ y).item()
    rhs = (x.T @ project_out(y, P)).item()
    assert abs(lhs - rhs) <= 1e-10
