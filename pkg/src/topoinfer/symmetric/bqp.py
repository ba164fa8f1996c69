"""Boolean quadratic program whose minimizer encodes the eigenvalue signs of a symmetric filter.

For each process the symmetric solutions of ``H C_x H = C_y`` are
``H = sum_i b_i p_i q_i^T`` with sign vector ``b``, so ``vec(H) = A b`` where
``A`` is the Khatri-Rao product of the ``q`` and ``p`` columns. Consistency
across processes ``A_m b_m = A_{m+1} b_{m+1}`` is the BQP ``min b^T W b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..diffusion import CovariancePair, FilterKind, GraphFilter
from ..linalg import check_symmetric, khatri_rao, numeric_rank, pinv, sqrt_and_inv_sqrt, sym_eig, symmetrize, vec
from .common import canonicalize_sign, covariance_residual


@dataclass
class ProcessFactors:
    """Per-process pieces: ``left = C_x^{-1/2} V Lambda^{1/2}``, ``right = C_x^{-1/2} V``."""

    left: np.ndarray
    right: np.ndarray
    eigenvalues: np.ndarray
    eigen_gaps: np.ndarray

    def filter(self, b: np.ndarray) -> np.ndarray:
        return (self.left * b) @ self.right.T


@dataclass
class BqpProblem:
    a_mats: list[np.ndarray]
    psi: np.ndarray
    gram: np.ndarray
    n: int
    m: int
    factors: list[ProcessFactors] = field(repr=False)

    @property
    def psi_rank(self) -> int:
        return numeric_rank(self.psi, 1e-9)

    def objective(self, b: np.ndarray) -> float:
        b = np.asarray(b, dtype=float)
        return float(b @ self.gram @ b)


def process_factors(pair: CovariancePair, tol_psd: float = 1e-10) -> ProcessFactors:
    root, inv_root = sqrt_and_inv_sqrt(pair.c_x)
    eig = sym_eig(symmetrize(root @ pair.c_y_hat @ root))
    lam = eig.eigenvalues
    lam = np.where(lam < tol_psd * max(lam.max(initial=0.0), 1.0), np.maximum(lam, 0.0), lam)
    right = inv_root @ eig.eigenvectors
    left = right * np.sqrt(np.maximum(lam, 0.0))
    return ProcessFactors(left, right, lam, eig.gaps)


def build_bqp(pairs: Sequence[CovariancePair], truth: np.ndarray | None = None, check_tol: float = 1e-8) -> BqpProblem:
    """Assemble ``A_m``, the block-bidiagonal stack ``Psi`` and ``W = Psi^T Psi``.

    With ``truth`` given (exact data), checks that each ``A_m`` reproduces
    ``vec(truth)`` for its matched sign pattern and raises if not.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("the sign-consistency program needs at least two processes (M >= 2)")
    n = pairs[0].n
    if any(p.n != n for p in pairs):
        raise ValueError("covariance pairs have inconsistent dimensions")
    factors = [process_factors(p) for p in pairs]
    a_mats = [khatri_rao(f.right, f.left) for f in factors]
    m = len(pairs)
    psi = np.zeros((n * n * (m - 1), n * m))
    for k in range(m - 1):
        psi[k * n * n:(k + 1) * n * n, k * n:(k + 1) * n] = a_mats[k]
        psi[k * n * n:(k + 1) * n * n, (k + 1) * n:(k + 2) * n] = -a_mats[k + 1]
    problem = BqpProblem(a_mats, psi, symmetrize(psi.T @ psi), n, m, factors)
    if truth is not None:
        b = true_signs(problem, truth)
        h = vec(np.asarray(truth, dtype=float))
        for k, A in enumerate(a_mats):
            err = np.linalg.norm(A @ b[k * n:(k + 1) * n] - h) / max(np.linalg.norm(h), 1e-300)
            if err > check_tol:
                raise ValueError(f"process {k}: A_m b_m differs from vec(H) by {err:.2e}")
    return problem


def true_signs(problem: BqpProblem, H: np.ndarray) -> np.ndarray:
    """Sign pattern matching ``H``: signs of the least-squares coefficients of ``vec(H)`` on each ``A_m``."""
    h = vec(check_symmetric(H, name="filter"))
    blocks = [np.where(pinv(A, 1e-12) @ h >= 0, 1.0, -1.0) for A in problem.a_mats]
    return np.concatenate(blocks)


def filter_from_signs(b, problem: BqpProblem, pairs: Sequence[CovariancePair] | None = None,
                      canonical: bool = True) -> GraphFilter:
    """Average of the per-process filters selected by the sign blocks of ``b``."""
    b = np.asarray(b, dtype=float).reshape(-1)
    n, m = problem.n, problem.m
    if b.size != n * m or not np.all(np.abs(b) == 1):
        raise ValueError(f"sign vector must have {n * m} entries in {{-1, +1}}")
    H = sum(f.filter(b[k * n:(k + 1) * n]) for k, f in enumerate(problem.factors)) / m
    H = canonicalize_sign(H) if canonical else symmetrize(H)
    diag = {"method": "signs"}
    if pairs is not None:
        diag["residual_eps"] = covariance_residual(H, pairs)
    return GraphFilter(H, None, FilterKind.RAW, diagnostics=diag)
