"""First-order solver for ``min tr(W B)`` over PSD ``B`` with unit diagonal.

ADMM splits the PSD cone from the unit-diagonal affine set. The scaled dual
variable stays diagonal, so ``y = -rho diag(U)`` is a dual candidate; shifting
it by the smallest eigenvalue of ``W - Diag(y)`` makes it feasible and gives a
lower bound that certifies the returned objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import NotPSDError, check_symmetric, symmetrize


@dataclass
class SdpConfig:
    tol: float = 1e-6
    tol_obj: float = 1e-5
    max_iters: int = 50_000
    rho: float = 1.0
    max_size: int = 600
    check_every: int = 10


@dataclass
class SdpResult:
    B: np.ndarray
    objective: float
    lower_bound: float
    iterations: int
    converged: bool
    primal_residual: float
    dual_residual: float

    @property
    def gap(self) -> float:
        return self.objective - self.lower_bound


def _psd_part(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    pos = w > 0
    return symmetrize((V[:, pos] * w[pos]) @ V[:, pos].T)


def _unit_diag(B: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.maximum(np.diag(B), 1e-300))
    return symmetrize(B / np.outer(d, d))


def dual_bound(W: np.ndarray, y: np.ndarray) -> float:
    """``sum(y')`` for the feasible shift ``y' = y + min(0, lambda_min(W - Diag(y)))``."""
    lmin = np.linalg.eigvalsh(W - np.diag(y))[0]
    return float(np.sum(y) + W.shape[0] * min(lmin, 0.0))


def solve_sdp(W: np.ndarray, config: SdpConfig | None = None) -> SdpResult:
    """Solve the unit-diagonal SDP relaxation.

    The returned ``B`` is PSD with an exactly unit diagonal; ``converged``
    means residuals below ``tol`` and objective within ``tol_obj`` (relative)
    of the certified lower bound.
    """
    config = config or SdpConfig()
    W = check_symmetric(W, name="W")
    n = W.shape[0]
    if n > config.max_size:
        raise ValueError(f"SDP size {n} exceeds the configured cap {config.max_size}")
    w_eigs = np.linalg.eigvalsh(W) if n else np.zeros(0)
    scale = float(max(np.abs(w_eigs).max(initial=0.0), 0.0))
    if n and w_eigs[0] < -1e-8 * max(scale, 1.0):
        raise NotPSDError(f"W has eigenvalue {w_eigs[0]:.3e} < 0")
    if scale == 0.0:
        return SdpResult(np.eye(n), 0.0, 0.0, 0, True, 0.0, 0.0)
    Ws = W / scale
    rho = config.rho
    Z = np.eye(n)
    U = np.zeros((n, n))
    idx = np.arange(n)
    r_norm = s_norm = np.inf
    next_adapt, it, converged = 20, 0, False
    B_out = Z
    for it in range(1, config.max_iters + 1):
        B = _psd_part(Z - U - Ws / rho)
        Z_old = Z
        Z = B + U
        Z[idx, idx] = 1.0
        U = U + B - Z
        if it % config.check_every and it != next_adapt:
            continue
        r_norm = np.linalg.norm(B - Z) / np.sqrt(n)
        s_norm = rho * np.linalg.norm(Z - Z_old) / np.sqrt(n)
        if r_norm < config.tol and s_norm < config.tol:
            B_out = _unit_diag(B)
            obj = float(np.sum(Ws * B_out))
            lb = dual_bound(Ws, -rho * np.diag(U))
            if obj - lb <= config.tol_obj * max(abs(lb), 1e-6):
                converged = True
                break
        if it == next_adapt:
            next_adapt *= 2
            if r_norm > 5 * s_norm or s_norm > 5 * r_norm:
                f = float(np.clip(np.sqrt(r_norm / max(s_norm, 1e-300)), 0.1, 10.0))
                rho *= f
                U /= f
    B_out = _unit_diag(_psd_part(B))
    obj = float(np.sum(Ws * B_out))
    lb = dual_bound(Ws, -rho * np.diag(U))
    return SdpResult(B_out, obj * scale, lb * scale, it, converged, float(r_norm), float(s_norm))
