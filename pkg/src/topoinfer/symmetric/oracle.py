"""Exhaustive-enumeration oracles for small instances."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..diffusion import CovariancePair, FilterKind, GraphFilter
from .bqp import process_factors

MAX_ENUMERATION_N = 14


def sign_vectors(n: int) -> np.ndarray:
    """All ``2^n`` vectors in ``{-1, +1}^n`` as rows."""
    return np.array(list(itertools.product((1.0, -1.0), repeat=n))).reshape(-1, n)


def enumerate_symmetric_solutions(pairs_exact: Sequence[CovariancePair], tol: float = 1e-8) -> list[GraphFilter]:
    """All symmetric ``H`` solving ``H C_x,m H = C_y,m`` for every process.

    Candidates are the ``2^N`` sign choices for the first process; a candidate
    is kept if its relative residual on every other process is below ``tol``.
    """
    pairs = list(pairs_exact)
    if not pairs:
        raise ValueError("need at least one covariance pair")
    n = pairs[0].n
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration over 2^{n} sign vectors is limited to N <= {MAX_ENUMERATION_N}")
    f = process_factors(pairs[0])
    cands = np.einsum("ik,sk,jk->sij", f.left, sign_vectors(n), f.right)
    cands = 0.5 * (cands + cands.transpose(0, 2, 1))
    keep = np.ones(len(cands), dtype=bool)
    for p in pairs[1:]:
        R = p.c_y_hat - cands @ p.c_x @ cands.transpose(0, 2, 1)
        keep &= np.linalg.norm(R, axis=(1, 2)) <= tol * max(np.linalg.norm(p.c_y_hat), 1e-300)
    return [GraphFilter(H, None, FilterKind.RAW) for H in cands[keep]]


def symmetric_sign_patterns(Q_signed: np.ndarray, U: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Sign vectors ``b`` (rows) making ``Q diag(b) U^T`` symmetric within ``tol`` (Frobenius)."""
    n = Q_signed.shape[1]
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration is limited to N <= {MAX_ENUMERATION_N}")
    B = sign_vectors(n)
    X = np.einsum("ik,sk,jk->sij", Q_signed, B, U)
    asym = np.linalg.norm(X - X.transpose(0, 2, 1), axis=(1, 2))
    return B[asym <= tol]


def brute_force_bqp(W: np.ndarray, chunk: int = 1 << 14) -> tuple[np.ndarray, float]:
    """Exact ``min b^T W b`` over ``{-1, +1}^n``; the first sign is fixed by the ``b -> -b`` symmetry."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    if n > 24:
        raise ValueError("brute force is limited to n <= 24")
    if n == 0:
        return np.zeros(0), 0.0
    best_b, best = None, np.inf
    total = 1 << (n - 1)
    bits = np.arange(n - 1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        rest = 1.0 - 2.0 * ((idx[:, None] >> bits) & 1)
        S = np.hstack([np.ones((len(idx), 1)), rest])
        vals = np.einsum("si,ij,sj->s", S, W, S)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_b = float(vals[k]), S[k].copy()
    return best_b, best
