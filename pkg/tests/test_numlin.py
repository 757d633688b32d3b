import numpy as np
import pytest
from hypothesis import given, strategies as st

from exactcond import numlin
from strategies import int_matrix, psd_matrices


def test_pinv_identity():
    assert np.allclose(numlin.pinv(np.eye(2)), np.eye(2))


def test_pinv_singular_diagonal():
    M = np.diag([2.0, 0.0])
    P = numlin.pinv(M)
    assert np.allclose(P, np.diag([0.5, 0.0]))
    assert np.allclose(M @ P @ M, M)


def test_pinv_rank_one_all_ones():
    M = np.ones((2, 2))
    P = numlin.pinv(M)
    assert np.allclose(P, np.full((2, 2), 0.25))
    assert np.allclose(M @ P @ M, M)


def test_pinv_of_zero_is_zero():
    assert np.array_equal(numlin.pinv(np.zeros((3, 3))), np.zeros((3, 3)))


@given(psd_matrices())
def test_pinv_matches_svd_oracle(S):
    # numpy's SVD-based pinv is an independent route to the same matrix
    assert numlin.allclose(numlin.pinv(S), np.linalg.pinv(S, rcond=1e-10, hermitian=False), 1e-7)


@given(psd_matrices())
def test_pinv_penrose_conditions(S):
    P = numlin.pinv(S)
    assert numlin.allclose(S @ P @ S, S, 1e-8)
    assert numlin.allclose(P @ S @ P, P, 1e-8)
    assert numlin.allclose((S @ P).T, S @ P, 1e-8)


def test_zero_vector_in_every_column_space():
    assert numlin.in_col_space(np.zeros((2, 2)), np.zeros(2))
    assert numlin.in_col_space(np.ones((2, 2)), np.zeros(2))


def test_col_space_membership():
    M = np.ones((2, 2))
    assert numlin.in_col_space(M, [1.0, 1.0])
    assert not numlin.in_col_space(M, [1.0, -1.0])


def test_col_space_dimension_mismatch():
    with pytest.raises(ValueError):
        numlin.in_col_space(np.eye(2), [1.0, 2.0, 3.0])


@given(psd_matrices(), st.data())
def test_image_vectors_are_in_col_space(S, data):
    u = data.draw(int_matrix(S.shape[0], 1))[:, 0]
    assert numlin.in_col_space(S, S @ u)


def test_as_psd_rejects_asymmetric_and_negative():
    with pytest.raises(ValueError):
        numlin.as_psd([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        numlin.as_psd([[-1.0]])
    with pytest.raises(ValueError):
        numlin.as_psd([[np.nan]])


def test_as_psd_clamps_roundoff():
    S = numlin.as_psd([[1.0, 1.0], [1.0, 1.0 - 1e-14]])
    assert np.linalg.eigvalsh(S).min() >= 0.0


def test_rref_identity():
    R, S = numlin.rref_transform(np.eye(2))
    assert np.array_equal(R, np.eye(2))
    assert np.array_equal(S, np.eye(2))


@pytest.mark.parametrize(
    "M, expected",
    [
        ([[0.0, 1.0], [0.0, 2.0]], [[0.0, 1.0], [0.0, 0.0]]),
        ([[1.0, 2.0], [2.0, 4.0]], [[1.0, 2.0], [0.0, 0.0]]),
        ([[2.0, 4.0, 2.0], [1.0, 3.0, 0.0]], [[1.0, 0.0, 3.0], [0.0, 1.0, -1.0]]),
    ],
)
def test_rref_hand_cases(M, expected):
    R, S = numlin.rref_transform(M)
    assert np.allclose(R, expected)
    assert np.allclose(S @ np.array(M), R)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_rref_properties(m, n, data):
    M = data.draw(int_matrix(m, n))
    R, S = numlin.rref_transform(M)
    assert numlin.allclose(S @ M, R, 1e-9)
    assert abs(np.linalg.det(S)) > 0
    piv = numlin.pivot_columns(R)
    assert len(piv) == np.linalg.matrix_rank(M)
    assert piv == sorted(piv)
    for i, c in enumerate(piv):
        col = np.zeros(m)
        col[i] = 1.0
        assert np.array_equal(R[:, c], col)
    assert not R[len(piv):].any()


def test_rank_split_zero_and_scalar():
    S, T, r = numlin.rank_split(np.zeros((2, 3)))
    assert r == 0 and np.array_equal(S, np.eye(2)) and np.array_equal(T, np.eye(3))
    S, T, r = numlin.rank_split([[3.0]])
    assert r == 1
    assert np.allclose(S, [[1 / 3]]) and np.allclose(T, [[1.0]])


def test_rank_split_row():
    A = np.array([[1.0, 1.0]])
    S, T, r = numlin.rank_split(A)
    assert r == 1
    assert np.allclose(S @ A @ T.T, [[1.0, 0.0]])


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_rank_split_block_form(m, n, data):
    A = data.draw(int_matrix(m, n))
    S, T, r = numlin.rank_split(A)
    block = np.zeros((m, n))
    block[np.arange(r), np.arange(r)] = 1.0
    assert r == np.linalg.matrix_rank(A)
    assert numlin.allclose(S @ A @ T.T, block, 1e-9)
    assert numlin.allclose(T @ T.T, np.eye(n), 1e-12)
    assert abs(np.linalg.det(S)) > 0


def test_condition_gaussian_example_two_coins():
    Sigma = [[1, 0, 1], [0, 1, -1], [1, -1, 2]]
    mean, cov = numlin.condition_gaussian(np.zeros(3), Sigma, 2, [0.0])
    assert numlin.allclose(mean, [0, 0], 1e-12)
    assert numlin.allclose(cov, [[0.5, 0.5], [0.5, 0.5]], 1e-12)


def test_condition_gaussian_noisy_measurement():
    mean, cov = numlin.condition_gaussian([50, 50], [[100, 100], [100, 125]], 1, [40])
    assert abs(mean[0] - 42) < 1e-12 and abs(cov[0, 0] - 20) < 1e-12


def test_condition_gaussian_tautology_leaves_block_unchanged():
    Sigma = np.zeros((3, 3))
    Sigma[:2, :2] = [[2.0, 1.0], [1.0, 3.0]]
    mean, cov = numlin.condition_gaussian([1.0, 2.0, 5.0], Sigma, 2, [5.0])
    assert np.allclose(mean, [1, 2]) and np.allclose(cov, Sigma[:2, :2])


def test_condition_gaussian_infeasible():
    assert numlin.condition_gaussian([0.0, 0.0], np.diag([1.0, 0.0]), 1, [1.0]) is None


@given(psd_matrices(n=3), st.data())
def test_posterior_independent_of_generalized_inverse(S, data):
    # S22 G S22 = S22 for G = pinv + (I - P) X (I - P) with P the range projector
    mu = np.zeros(3)
    a = S[1:, :] @ data.draw(int_matrix(3, 1))[:, 0]
    post = numlin.condition_gaussian(mu, S, 1, a)
    assert post is not None
    S12, S22 = S[:1, 1:], S[1:, 1:]
    P = numlin.col_projector(S22)
    X = data.draw(int_matrix(2, 2))
    G = numlin.pinv(S22) + (np.eye(2) - P) @ X @ (np.eye(2) - P)
    assert numlin.allclose(S22 @ G @ S22, S22, 1e-8)
    mean = S12 @ G @ a
    cov = S[:1, :1] - S12 @ G @ S12.T
    assert numlin.allclose(post[0], mean, 1e-7)
    assert numlin.allclose(post[1], cov, 1e-7)


def test_default_tol_env(monkeypatch):
    monkeypatch.setenv("GAUSS_COND_TOL", "1e-4")
    assert numlin.default_tol() == 1e-4
    monkeypatch.delenv("GAUSS_COND_TOL")
    assert numlin.default_tol() == numlin.DEFAULT_TOL
