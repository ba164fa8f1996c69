"""Filter identification from input-output realization pairs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diffusion import FilterKind, GraphFilter
from .linalg import (
    duplication_matrix,
    duplication_pinv,
    numeric_rank,
    null_space,
    pinv,
    sym_eig,
    unvech,
    vec,
    vech_dim,
)
from .recovery import SpectralTemplates

# Above this many design rows the Kronecker design is never materialized.
DESIGN_ROW_LIMIT = 10_000
DEGENERATE_GAP = 1e-8


def _check_pairs(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise ValueError(f"X and Y shapes differ: {X.shape} vs {Y.shape}")
    if X.shape[1] < 1:
        raise ValueError("need at least one input-output pair")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("input-output data contain non-finite values")
    return X, Y


def design_matrix(X: np.ndarray) -> np.ndarray:
    """``(X^T kron I_N) D_N``: maps ``vech(H)`` to ``vec(H X)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    D = duplication_matrix(n, sparse=True)
    K = np.kron(X.T, np.eye(n))
    return np.asarray((D.T @ K.T).T)


def identify_ls(X, Y, rank_tol: float = 1e-10) -> GraphFilter:
    """Least-squares symmetric filter from pairs ``y_m ~ H x_m``.

    Solved in half-vectorized coordinates so the result is symmetric by
    construction; the minimum-norm minimizer is returned when ``X`` is rank
    deficient.
    """
    X, Y = _check_pairs(X, Y)
    n, m = X.shape
    if n * m <= DESIGN_ROW_LIMIT:
        h = pinv(design_matrix(X), rank_tol) @ vec(Y)
    else:
        # normal equations: D^T (X X^T kron I) D vech(H) = D^T vec(Y X^T)
        D = duplication_matrix(n, sparse=True)
        G = np.kron(X @ X.T, np.eye(n))
        gram = np.asarray((D.T @ (D.T @ G).T).T)
        rhs = D.T @ vec(Y @ X.T)
        h = pinv(gram, rank_tol**2) @ rhs
    rank = int(np.linalg.matrix_rank(X))
    H = unvech(h)
    return GraphFilter(H, None, FilterKind.RAW, diagnostics={"input_rank": rank, "unique": rank == n})


def identify_asymmetric(X, Y, rank_tol: float = 1e-10) -> np.ndarray:
    """Plain least squares ``Y X^+`` ignoring symmetry (baseline estimator)."""
    X, Y = _check_pairs(X, Y)
    return Y @ pinv(X, rank_tol)


def rank_bound(X, rank_tol: float = 1e-10) -> tuple[int, int]:
    """``(numeric rank of the design, upper bound from rank(X))``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    m_r = numeric_rank(X, rank_tol) if np.any(X) else 0
    bound = vech_dim(n) - (n - m_r + 1) * (n - m_r) // 2
    design = design_matrix(X)
    r = numeric_rank(design, rank_tol) if np.any(design) else 0
    return r, bound


@dataclass
class NullSpaceReport:
    n_vectors: int
    expected: int
    max_residual: float
    rank: int
    gram_min_eig: float
    in_kernel: bool
    independent: bool

    @property
    def passed(self) -> bool:
        return self.in_kernel and self.independent and self.n_vectors == self.expected


def null_space_vectors(X, rank_tol: float = 1e-10) -> np.ndarray:
    """Columns ``D^+ (v_i kron v_j + v_j kron v_i)`` for ``i <= j`` over a basis of ``ker(X^T)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    K = null_space(X.T, rank_tol) if np.any(X) else np.eye(n)
    k = K.shape[1]
    Dp = duplication_pinv(n, sparse=True)
    cols = []
    for j in range(k):
        for i in range(j + 1):
            vi, vj = K[:, i], K[:, j]
            cols.append(Dp @ (np.kron(vi, vj) + np.kron(vj, vi)))
    if not cols:
        return np.zeros((vech_dim(n), 0))
    return np.column_stack(cols)


def null_space_basis_check(X, tol: float = 1e-8, rank_tol: float = 1e-10) -> NullSpaceReport:
    """Build the kernel vectors explicitly and check membership and independence."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    m_r = numeric_rank(X, rank_tol) if np.any(X) else 0
    expected = (n - m_r + 1) * (n - m_r) // 2
    Vk = null_space_vectors(X, rank_tol)
    if Vk.shape[1] == 0:
        return NullSpaceReport(0, expected, 0.0, 0, np.inf, True, True)
    design = design_matrix(X)
    scale = max(1.0, np.linalg.norm(design, 2))
    resid = np.linalg.norm(design @ Vk, axis=0) / (scale * np.linalg.norm(Vk, axis=0))
    gram = Vk.T @ Vk
    gmin = float(np.linalg.eigvalsh(gram)[0])
    r = numeric_rank(Vk, rank_tol)
    return NullSpaceReport(
        n_vectors=Vk.shape[1],
        expected=expected,
        max_residual=float(resid.max()),
        rank=r,
        gram_min_eig=gmin,
        in_kernel=bool(resid.max() < tol),
        independent=bool(r == Vk.shape[1] and gmin > 0),
    )


def extract_spectral_templates(H, warn: bool = True) -> SpectralTemplates:
    """Eigenbasis of a symmetric filter, with eigen-gap diagnostics."""
    M = H.matrix if isinstance(H, GraphFilter) else np.asarray(H, dtype=float)
    eig = sym_eig(M)
    gaps = eig.gaps
    scale = max(1.0, float(np.max(np.abs(eig.eigenvalues)))) if eig.eigenvalues.size else 1.0
    degenerate = bool(np.any(gaps < DEGENERATE_GAP * scale))
    if degenerate and warn:
        warnings.warn("filter has (near-)repeated eigenvalues; spectral templates are not unique", stacklevel=2)
    return SpectralTemplates(basis=eig.eigenvectors, eigen_gaps=gaps, eigenvalues=eig.eigenvalues, degenerate=degenerate)
