from __future__ import annotations

from typing import Sequence

import numpy as np

from ..diffusion import CovariancePair
from ..linalg import symmetrize


def stack_pairs(pairs: Sequence[CovariancePair]) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one covariance pair")
    n = pairs[0].n
    if any(p.n != n for p in pairs):
        raise ValueError("covariance pairs have inconsistent dimensions")
    return np.stack([p.c_x for p in pairs]), np.stack([p.c_y_hat for p in pairs])


def canonicalize_sign(H: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Resolve the global sign: nonnegative trace, or a positive largest entry when the trace vanishes."""
    H = symmetrize(np.asarray(H, dtype=float))
    tr = np.trace(H)
    scale = max(np.abs(H).max(), np.finfo(float).tiny) if H.size else 1.0
    if abs(tr) > rel_tol * scale * H.shape[0]:
        return H if tr > 0 else -H
    flat = H.reshape(-1)
    return H if flat[np.argmax(np.abs(flat))] >= 0 else -H


def covariance_residual(H: np.ndarray, pairs: Sequence[CovariancePair]) -> float:
    """``sum_m ||C_y,m - H C_x,m H||_F^2``."""
    Cx, Cy = stack_pairs(pairs)
    R = Cy - H @ Cx @ H.T
    return float(np.sum(R * R))


def filter_error(H_est: np.ndarray, H_true: np.ndarray) -> float:
    """Relative Frobenius error after resolving the global sign ambiguity."""
    H_est = np.asarray(H_est, dtype=float)
    H_true = np.asarray(H_true, dtype=float)
    d = min(np.linalg.norm(H_est - H_true), np.linalg.norm(H_est + H_true))
    return float(d / np.linalg.norm(H_true))
