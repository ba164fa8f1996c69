"""Linear-algebra primitives checked against definitions and LAPACK."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from topoinfer.linalg import (
    NotPSDError,
    canonical_signs,
    duplication_matrix,
    duplication_pinv,
    khatri_rao,
    null_space,
    numeric_rank,
    pinv,
    principal_sqrt,
    sqrt_and_inv_sqrt,
    sym_eig,
    unvech,
    vec,
    vech,
    vech_index_map,
)

from conftest import random_psd, random_symmetric

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric_matrices(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    A = draw(arrays(np.float64, (n, n), elements=finite))
    return (A + A.T) / 2


class TestVech:
    def test_two_by_two(self):
        np.testing.assert_array_equal(vech(np.array([[1.0, 2.0], [2.0, 3.0]])), [1, 2, 3])

    def test_identity(self):
        np.testing.assert_array_equal(vech(np.eye(2)), [1, 0, 1])

    def test_duplication_matches_vec(self, rng):
        H = random_symmetric(rng, 5)
        # vec built by definition: column after column
        expected = np.concatenate([H[:, j] for j in range(5)])
        np.testing.assert_allclose(duplication_matrix(5) @ vech(H), expected, atol=0)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            vech(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @given(symmetric_matrices())
    def test_roundtrip(self, H):
        np.testing.assert_array_equal(unvech(vech(H)), H)


class TestDuplication:
    def test_n1(self):
        np.testing.assert_array_equal(duplication_matrix(1), [[1.0]])

    def test_n2_index_map(self):
        np.testing.assert_array_equal(vech_index_map(2), [0, 1, 1, 2])
        D = duplication_matrix(2)
        assert D.shape == (4, 3)
        np.testing.assert_array_equal(D.argmax(axis=1), [0, 1, 1, 2])

    def test_pinv_left_inverse(self):
        Dp = duplication_pinv(4)
        np.testing.assert_allclose(Dp @ duplication_matrix(4), np.eye(10), atol=1e-12)

    def test_pinv_matches_numpy(self):
        np.testing.assert_allclose(duplication_pinv(5), np.linalg.pinv(duplication_matrix(5)), atol=1e-12)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_full_column_rank(self, n):
        D = duplication_matrix(n)
        assert np.all(D.sum(axis=1) == 1)
        assert np.linalg.matrix_rank(D) == n * (n + 1) // 2

    @given(symmetric_matrices())
    def test_vec_vech_identities(self, H):
        n = H.shape[0]
        np.testing.assert_array_equal(duplication_matrix(n) @ vech(H), vec(H))
        np.testing.assert_allclose(duplication_pinv(n) @ vec(H), vech(H), rtol=1e-12, atol=1e-12)

    def test_sparse_equals_dense(self):
        np.testing.assert_array_equal(duplication_matrix(6, sparse=True).toarray(), duplication_matrix(6))


class TestSymEig:
    def test_orthonormal_and_reconstructs(self, rng):
        for n in (1, 5, 20, 50):
            M = random_symmetric(rng, n)
            e = sym_eig(M)
            np.testing.assert_allclose(e.eigenvectors.T @ e.eigenvectors, np.eye(n), atol=1e-10)
            assert np.linalg.norm(e.reconstruct() - M) <= 1e-8 * np.linalg.norm(M)
            assert np.all(np.diff(e.eigenvalues) >= 0)

    def test_reconstruction_many(self, rng):
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 51))
            M = random_symmetric(rng, n)
            e = sym_eig(M)
            worst = max(worst, np.linalg.norm(e.reconstruct() - M) / np.linalg.norm(M))
        assert worst < 1e-8

    def test_sign_convention_deterministic(self, rng):
        M = random_symmetric(rng, 6)
        V = sym_eig(M).eigenvectors
        idx = np.argmax(np.abs(V), axis=0)
        assert np.all(V[idx, np.arange(6)] > 0)
        np.testing.assert_array_equal(canonical_signs(-V), V)

    def test_matches_lapack(self, rng):
        M = random_symmetric(rng, 10)
        np.testing.assert_allclose(sym_eig(M).eigenvalues, np.linalg.eigvalsh(M), atol=1e-12)


class TestPrincipalSqrt:
    def test_identity(self):
        np.testing.assert_allclose(principal_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(principal_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_random(self, rng):
        A = rng.standard_normal((8, 8))
        C = A @ A.T
        R = principal_sqrt(C)
        assert np.linalg.norm(R @ R - C) / np.linalg.norm(C) < 1e-10
        assert np.linalg.eigvalsh(R)[0] >= -1e-12

    def test_clips_tiny_negative(self):
        C = np.diag([1.0, -1e-13])
        np.testing.assert_allclose(principal_sqrt(C), np.diag([1.0, 0.0]))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSDError):
            principal_sqrt(np.diag([1.0, -0.1]))

    def test_fourth_power(self, rng):
        for _ in range(20):
            C = random_psd(rng, 6)
            R = principal_sqrt(principal_sqrt(C))
            R4 = np.linalg.matrix_power(R, 4)
            assert np.linalg.norm(R4 - C) / np.linalg.norm(C) < 1e-6

    def test_inverse_root(self, rng):
        C = random_psd(rng, 5)
        R, Ri = sqrt_and_inv_sqrt(C)
        np.testing.assert_allclose(R @ Ri, np.eye(5), atol=1e-10)

    def test_inverse_root_singular(self):
        with pytest.raises(ValueError, match="condition"):
            sqrt_and_inv_sqrt(np.diag([1.0, 0.0]))


class TestKhatriRao:
    def test_identity(self):
        np.testing.assert_array_equal(khatri_rao(np.eye(2), np.eye(2)), [[1, 0], [0, 0], [0, 0], [0, 1]])

    def test_rank_one(self):
        out = khatri_rao(np.array([[1.0], [1.0]]), np.array([[2.0], [3.0]]))
        np.testing.assert_array_equal(out.ravel(), [2, 3, 2, 3])

    def test_columnwise_kron(self, rng):
        A, B = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
        K = khatri_rao(A, B)
        for j in range(4):
            np.testing.assert_allclose(K[:, j], np.kron(A[:, j], B[:, j]))

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


class TestPinv:
    def test_identity(self):
        np.testing.assert_array_equal(pinv(np.eye(3)), np.eye(3))

    def test_zero(self):
        np.testing.assert_array_equal(pinv(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_full_rank_left_inverse(self, rng):
        A = rng.standard_normal((6, 4))
        np.testing.assert_allclose(pinv(A) @ A, np.eye(4), atol=1e-10)

    def test_rank_threshold(self):
        A = np.diag([1.0, 1e-12])
        np.testing.assert_array_equal(pinv(A), np.diag([1.0, 0.0]))
        assert numeric_rank(A) == 1

    def test_non_finite(self):
        with pytest.raises(ValueError):
            pinv(np.array([[np.nan]]))

    def test_null_space(self, rng):
        A = rng.standard_normal((3, 5))
        K = null_space(A)
        assert K.shape == (5, 2)
        np.testing.assert_allclose(A @ K, 0, atol=1e-12)
