"""Dense symmetric linear-algebra primitives.

Half-vectorization, duplication matrices, principal square roots,
Khatri-Rao products and a thresholded pseudoinverse. Everything here is a
pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

SYM_TOL = 1e-8


class NotPSDError(ValueError):
    """Raised when a matrix expected to be PSD has a materially negative eigenvalue."""


def _as_square(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def check_symmetric(M: np.ndarray, tol: float = SYM_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a float array, raising if it is not symmetric within ``tol``.

    The tolerance is relative to ``max(1, max|M|)``.
    """
    M = _as_square(M, name)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol * scale:
        raise ValueError(f"{name} is not symmetric (max |M - M^T| = {asym:.3e})")
    return M


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues are ascending; each eigenvector has its largest-magnitude
    entry made positive so that repeated runs give identical bases.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.eigenvalues)


def canonical_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns of ``V`` so the largest-magnitude entry of each is positive.

    Ties in magnitude are broken by the lowest row index.
    """
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eig(M: np.ndarray, check: bool = True) -> SymEig:
    if check:
        M = check_symmetric(M)
    else:
        M = np.asarray(M, dtype=float)
    w, V = np.linalg.eigh(symmetrize(M))
    return SymEig(eigenvalues=w, eigenvectors=canonical_signs(V))


def vech(M: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    """Column-major stacking of the entries on and below the diagonal.

    >>> vech(np.array([[1., 2.], [2., 3.]]))
    array([1., 2., 3.])
    """
    M = check_symmetric(M, tol)
    rows, cols = _vech_indices(M.shape[0])
    return M[rows, cols].copy()


def unvech(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    n = vech_dim_inverse(v.size)
    rows, cols = _vech_indices(n)
    M = np.zeros((n, n))
    M[rows, cols] = v
    M[cols, rows] = v
    return M


def vech_dim(n: int) -> int:
    return n * (n + 1) // 2


def vech_dim_inverse(k: int) -> int:
    n = int(round((np.sqrt(8 * k + 1) - 1) / 2))
    if vech_dim(n) != k:
        raise ValueError(f"{k} is not a triangular number")
    return n


@lru_cache(maxsize=64)
def _vech_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    # column-major lower triangle: column j contributes rows j..n-1
    cols, rows = np.triu_indices(n)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def vec(M: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v: np.ndarray, n_rows: int) -> np.ndarray:
    v = np.asarray(v)
    return v.reshape(n_rows, -1, order="F")


def vech_index_map(n: int) -> np.ndarray:
    """For each position of ``vec`` (column-major), the ``vech`` index it copies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows, cols = _vech_indices(n)
    lookup = np.empty((n, n), dtype=int)
    k = np.arange(rows.size)
    lookup[rows, cols] = k
    lookup[cols, rows] = k
    return vec(lookup)


def duplication_matrix(n: int, sparse: bool = False):
    """Binary ``n^2 x n(n+1)/2`` matrix ``D`` with ``D @ vech(H) == vec(H)``.

    Returned dense unless ``sparse`` is set, in which case a CSR matrix is
    returned.
    """
    if int(n) != n or n < 1:
        raise ValueError("duplication matrix needs n >= 1")
    n = int(n)
    idx = vech_index_map(n)
    D = sp.csr_matrix((np.ones(n * n), (np.arange(n * n), idx)), shape=(n * n, vech_dim(n)))
    return D if sparse else D.toarray()


def duplication_pinv(n: int, sparse: bool = False):
    """Moore-Penrose pseudoinverse of the duplication matrix, in closed form.

    ``D^T D`` is diagonal (1 for diagonal entries, 2 otherwise), so
    ``D^+ = (D^T D)^{-1} D^T``.
    """
    D = duplication_matrix(n, sparse=True)
    weights = np.asarray(D.sum(axis=0)).ravel()
    Dp = sp.diags(1.0 / weights) @ D.T
    Dp = sp.csr_matrix(Dp)
    return Dp if sparse else Dp.toarray()


def _psd_eig(C: np.ndarray, tol_psd: float) -> tuple[np.ndarray, np.ndarray]:
    C = check_symmetric(C, name="covariance")
    w, V = np.linalg.eigh(symmetrize(C))
    lam_max = float(np.max(np.abs(w))) if w.size else 0.0
    floor = -tol_psd * max(lam_max, np.finfo(float).tiny)
    if w.size and w[0] < floor:
        raise NotPSDError(f"matrix is not PSD: min eigenvalue {w[0]:.3e} < {floor:.3e}")
    return np.clip(w, 0.0, None), V


def principal_sqrt(C: np.ndarray, tol_psd: float = 1e-10) -> np.ndarray:
    """Unique symmetric PSD square root of a PSD matrix.

    Eigenvalues in ``[-tol_psd * lambda_max, 0)`` are clipped to zero; more
    negative ones raise :class:`NotPSDError`.
    """
    w, V = _psd_eig(C, tol_psd)
    R = (V * np.sqrt(w)) @ V.T
    return symmetrize(R)


def inv_sqrt(C: np.ndarray, cond_tol: float = 1e-10) -> np.ndarray:
    """``C^{-1/2}`` for a symmetric positive definite ``C``.

    Raises ``ValueError`` reporting the condition number when the smallest
    eigenvalue is below ``cond_tol * lambda_max``.
    """
    C = check_symmetric(C, name="covariance")
    w, V = np.linalg.eigh(symmetrize(C))
    if w[-1] <= 0 or w[0] <= cond_tol * w[-1]:
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise ValueError(f"covariance is singular or ill-conditioned (condition number {cond:.3e})")
    return symmetrize((V / np.sqrt(w)) @ V.T)


def sqrt_and_inv_sqrt(C: np.ndarray, cond_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    C = check_symmetric(C, name="covariance")
    w, V = np.linalg.eigh(symmetrize(C))
    if w[-1] <= 0 or w[0] <= cond_tol * w[-1]:
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise ValueError(f"covariance is singular or ill-conditioned (condition number {cond:.3e})")
    s = np.sqrt(w)
    return symmetrize((V * s) @ V.T), symmetrize((V / s) @ V.T)


def project_psd(M: np.ndarray) -> np.ndarray:
    """Euclidean projection of a symmetric matrix onto the PSD cone."""
    w, V = np.linalg.eigh(symmetrize(M))
    return symmetrize((V * np.clip(w, 0.0, None)) @ V.T)


def khatri_rao(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Columnwise Kronecker product: column ``j`` is ``kron(A[:, j], B[:, j])``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"column counts differ: {A.shape[1]} vs {B.shape[1]}")
    p, n = A.shape
    q = B.shape[0]
    return (A[:, None, :] * B[None, :, :]).reshape(p * q, n)


def pinv(A: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Pseudoinverse keeping singular values above ``rank_tol * sigma_max``."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("pinv input contains non-finite entries")
    if A.size == 0:
        return np.zeros(A.shape[::-1])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(A.shape[::-1])
    keep = s > rank_tol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def numeric_rank(A: np.ndarray, rank_tol: float = 1e-10) -> int:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def null_space(A: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker(A)`` using the same threshold as :func:`pinv`."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.size == 0:
        return np.eye(n)
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > rank_tol * s[0]))
    return Vt[r:].T.copy()


def offdiag_mass(M: np.ndarray) -> float:
    """Frobenius norm of the off-diagonal part of ``M``."""
    M = np.asarray(M)
    return float(np.linalg.norm(M - np.diag(np.diag(M))))
