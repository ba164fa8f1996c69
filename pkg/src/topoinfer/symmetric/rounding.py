"""Gaussian randomization: sample from the relaxed solution and round to signs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import symmetrize


@dataclass
class RoundingResult:
    b: np.ndarray
    objective: float
    draw_objectives: np.ndarray


def sign_round(z: np.ndarray) -> np.ndarray:
    """Elementwise sign with ``sgn(0) = +1``."""
    return np.where(np.asarray(z) >= 0, 1.0, -1.0)


def gaussian_factor(B: np.ndarray) -> np.ndarray:
    """``G`` with ``G G^T = B`` after clipping negative eigenvalues."""
    w, V = np.linalg.eigh(symmetrize(np.asarray(B, dtype=float)))
    return V * np.sqrt(np.maximum(w, 0.0))


def randomize_round(B: np.ndarray, W: np.ndarray, L: int = 100, seed=None) -> RoundingResult:
    """Best of ``L`` sign vectors ``sgn(z)``, ``z ~ N(0, B)``, under ``b^T W b``.

    Draws are taken in order from one stream, so a smaller ``L`` with the
    same seed sees a prefix of the same draws.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    G = gaussian_factor(B)
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((L, G.shape[1]))
    signs = sign_round(xi @ G.T)
    objs = np.einsum("li,ij,lj->l", signs, np.asarray(W, dtype=float), signs)
    k = int(np.argmin(objs))
    return RoundingResult(signs[k], float(objs[k]), objs)
