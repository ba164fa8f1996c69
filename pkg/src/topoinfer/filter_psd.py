"""Identification of PSD graph filters from input/output covariances."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from .diffusion import CovariancePair, FilterKind, GraphFilter
from .linalg import principal_sqrt, project_psd, sqrt_and_inv_sqrt, symmetrize, vec

# Above this many entries in the stacked Kronecker design the normal equations are used.
DESIGN_ENTRY_LIMIT = 2_000_000


def whitened_output(pair: CovariancePair, cx_sqrt: np.ndarray, tol_psd: float = 1e-10) -> np.ndarray:
    """``(C_x^{1/2} C_y C_x^{1/2})^{1/2}``, clipping tiny negative eigenvalues."""
    if pair.samples is not None and pair.samples < pair.n:
        warnings.warn(f"output covariance from {pair.samples} < N={pair.n} samples is rank deficient", stacklevel=3)
    return principal_sqrt(symmetrize(cx_sqrt @ pair.c_y_hat @ cx_sqrt), tol_psd)


def identify_psd_single(pair: CovariancePair, tol_psd: float = 1e-10) -> GraphFilter:
    """Closed-form PSD filter ``C_x^{-1/2} (C_x^{1/2} C_y C_x^{1/2})^{1/2} C_x^{-1/2}``."""
    root, inv_root = sqrt_and_inv_sqrt(pair.c_x)
    H = inv_root @ whitened_output(pair, root, tol_psd) @ inv_root
    return GraphFilter(symmetrize(H), None, FilterKind.RAW, diagnostics={"method": "psd", "m": 1})


def identify_psd_multi(pairs: Sequence[CovariancePair], weights: str | Sequence[float] | None = None,
                       tol_psd: float = 1e-10) -> GraphFilter:
    """Least-squares PSD filter from several covariance pairs.

    Minimizes ``sum_m w_m ||C_xyx,m^{1/2} - C_x,m^{1/2} H C_x,m^{1/2}||_F^2``
    over unconstrained ``H``, then symmetrizes and clips negative
    eigenvalues. ``weights="samples"`` uses ``w_m = P_m``; the default is
    uniform. Diagnostics carry the pre-projection residual and the size of
    the projection step.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one covariance pair")
    n = pairs[0].n
    if any(p.n != n for p in pairs):
        raise ValueError("covariance pairs have inconsistent dimensions")
    if weights is None:
        w = np.ones(len(pairs))
    elif isinstance(weights, str):
        if weights != "samples":
            raise ValueError(f"unknown weighting {weights!r}")
        w = np.array([p.samples if p.samples is not None else 1.0 for p in pairs], dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(pairs),) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per pair")

    roots, targets = [], []
    for p in pairs:
        root, _ = sqrt_and_inv_sqrt(p.c_x)
        roots.append(root)
        targets.append(whitened_output(p, root, tol_psd))

    m = len(pairs)
    if n ** 4 * m <= DESIGN_ENTRY_LIMIT:
        Xbar = np.vstack([np.sqrt(wi) * np.kron(R, R) for wi, R in zip(w, roots)])
        ybar = np.concatenate([np.sqrt(wi) * vec(T) for wi, T in zip(w, targets)])
        h, *_ = np.linalg.lstsq(Xbar, ybar, rcond=None)
    else:
        G = sum(wi * np.kron(R @ R, R @ R) for wi, R in zip(w, roots))
        rhs = sum(wi * vec(R @ T @ R) for wi, R, T in zip(w, roots, targets))
        h = np.linalg.solve(G, rhs)
    H_ls = h.reshape(n, n, order="F")
    resid = float(np.sqrt(sum(wi * np.linalg.norm(T - R @ H_ls @ R) ** 2 for wi, R, T in zip(w, roots, targets))))
    H_sym = symmetrize(H_ls)
    H = project_psd(H_sym)
    diag = {
        "method": "psd",
        "m": m,
        "residual": resid,
        "asymmetry": float(np.linalg.norm(H_ls - H_ls.T)),
        "projection_step": float(np.linalg.norm(H - H_sym)),
    }
    return GraphFilter(H, None, FilterKind.RAW, diagnostics=diag)
