"""Projected gradient descent on the covariance-matching cost.

The cost is ``eps(H) = sum_m ||C_y,m - H C_x,m H^T||_F^2``; iterates are kept
symmetric by projecting each gradient step onto the symmetric matrices and
moving along the resulting feasible direction with an Armijo step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..diffusion import CovariancePair, FilterKind, GraphFilter
from ..linalg import symmetrize
from .common import canonicalize_sign, stack_pairs


@dataclass
class PgdConfig:
    """Step size ``eta`` (``None`` picks a scale-aware default), Armijo ``mu``/``beta``,
    stopping tolerance ``delta`` on ``||H_k - H_{k-1}||_F`` and the number of restarts."""

    eta: float | None = None
    mu: float = 1e-4
    beta: float = 0.5
    delta: float = 1e-8
    restarts: int = 10
    max_iters: int = 10_000
    max_backtracks: int = 60
    selection: str = "min-eps"

    def __post_init__(self):
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if not (0 < self.mu < 1 and 0 < self.beta < 1):
            raise ValueError("mu and beta must lie in (0, 1)")
        if self.delta <= 0 or self.restarts < 1 or self.max_iters < 1:
            raise ValueError("delta must be positive and restarts/max_iters at least 1")
        if self.selection not in ("min-eps", "sparsest"):
            raise ValueError(f"unknown restart selection {self.selection!r}")


@dataclass
class PgdRun:
    H: np.ndarray
    objective: float
    trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    backtrack_exhausted: bool = False


def objective_and_gradient(H: np.ndarray, pairs: Sequence[CovariancePair] | tuple[np.ndarray, np.ndarray]):
    """``(eps(H), grad eps(H))`` with ``grad = 4 sum_m (H C_x H^T H C_x - C_y H C_x)``.

    ``H`` need not be symmetric; the gradient is with respect to all entries.
    """
    Cx, Cy = pairs if isinstance(pairs, tuple) else stack_pairs(pairs)
    return _obj_grad(np.asarray(H, dtype=float), Cx, Cy)


def _obj(H, Cx, Cy):
    R = Cy - (H @ Cx) @ H.T
    return float(np.sum(R * R))


def _obj_grad(H, Cx, Cy):
    HC = H @ Cx
    R = Cy - HC @ H.T
    return float(np.sum(R * R)), -4.0 * np.sum(R @ HC, axis=0)


def _means_terms(means, nu):
    if means is None or nu == 0:
        return None
    my = np.column_stack([np.asarray(a, dtype=float) for a, _ in means])
    mx = np.column_stack([np.asarray(b, dtype=float) for _, b in means])
    return nu, my, mx


def _combined(H, Cx, Cy, mt, with_grad=True):
    if with_grad:
        f, g = _obj_grad(H, Cx, Cy)
    else:
        f, g = _obj(H, Cx, Cy), None
    if mt is not None:
        nu, my, mx = mt
        r = my - H @ mx
        f += nu * float(np.sum(r * r))
        if with_grad:
            g = g - 2.0 * nu * r @ mx.T
    return f, g


def default_eta(Cx: np.ndarray, Cy: np.ndarray) -> float:
    """``1 / sum_m lambda_max(C_x,m) lambda_max(C_y,m)``; Armijo shortens it when too long."""
    lx = np.linalg.eigvalsh(Cx)[:, -1]
    ly = np.linalg.eigvalsh(Cy)[:, -1]
    return float(1.0 / np.sum(lx * np.maximum(ly, 1e-12)))


def random_init(n: int, Cx: np.ndarray, Cy: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random symmetric start scaled so ``H C_x H`` has the size of ``C_y`` on average."""
    G = rng.standard_normal((n, n))
    G = symmetrize(G)
    fit = np.linalg.norm(np.einsum("ij,mjk,kl->mil", G, Cx, G), axis=(1, 2)).mean()
    target = np.linalg.norm(Cy, axis=(1, 2)).mean()
    return G * np.sqrt(target / fit) if fit > 0 and target > 0 else G


def pgd_run(H0: np.ndarray, Cx: np.ndarray, Cy: np.ndarray, config: PgdConfig, eta: float, mt=None) -> PgdRun:
    """A single projected-gradient run from ``H0``."""
    H = symmetrize(np.asarray(H0, dtype=float))
    f, g = _combined(H, Cx, Cy, mt)
    run = PgdRun(H, f, [f])
    for k in range(1, config.max_iters + 1):
        H_bar = symmetrize(H - eta * g)
        d = H_bar - H
        slope = float(np.sum(g * d))
        if slope >= 0 or not np.any(d):
            run.converged = True
            break
        alpha = 1.0
        for _ in range(config.max_backtracks + 1):
            H_new = H + alpha * d
            f_new, _ = _combined(H_new, Cx, Cy, mt, with_grad=False)
            if f - f_new >= -config.mu * alpha * slope:
                break
            alpha *= config.beta
        else:
            run.backtrack_exhausted = True
            break
        step = alpha * np.linalg.norm(d)
        H = H_new
        f, g = _combined(H, Cx, Cy, mt)
        run.trace.append(f)
        run.iterations = k
        if step <= config.delta:
            run.converged = True
            break
    run.H, run.objective = H, f
    return run


def _multi_start(pairs, config: PgdConfig, seed, mt, select_fn=None) -> GraphFilter:
    config = config or PgdConfig()
    Cx, Cy = stack_pairs(pairs)
    n = Cx.shape[1]
    eta = config.eta if config.eta is not None else default_eta(Cx, Cy)
    rng = np.random.default_rng(seed)
    runs = [pgd_run(random_init(n, Cx, Cy, rng), Cx, Cy, config, eta, mt) for _ in range(config.restarts)]
    if config.selection == "sparsest" and select_fn is not None:
        scores = [select_fn(r.H) for r in runs]
        best = runs[int(np.argmin(scores))]
    else:
        best = min(runs, key=lambda r: r.objective)
    H = canonicalize_sign(best.H)
    diag = {
        "method": "pgd",
        "eta": eta,
        "objective_trace": best.trace,
        "residual_eps": best.objective,
        "run_objectives": [r.objective for r in runs],
        "run_iterations": [r.iterations for r in runs],
        "converged": best.converged,
        "backtrack_exhausted": [r.backtrack_exhausted for r in runs],
        "monotone": all(all(b <= a for a, b in zip(r.trace, r.trace[1:])) for r in runs),
    }
    return GraphFilter(H, None, FilterKind.RAW, diagnostics=diag)


def pgd_identify(pairs: Sequence[CovariancePair], config: PgdConfig | None = None, seed=None,
                 select_fn=None) -> GraphFilter:
    """Best of ``config.restarts`` PGD runs from random symmetric starts.

    Runs are ranked by final cost, or, with ``selection="sparsest"``, by
    ``select_fn(H)`` (e.g. the l1 norm of the shift recovered from ``H``).
    """
    return _multi_start(pairs, config or PgdConfig(), seed, None, select_fn)


def pgd_identify_combined(pairs: Sequence[CovariancePair], means, nu: float, config: PgdConfig | None = None,
                          seed=None, select_fn=None) -> GraphFilter:
    """PGD on ``nu * sum_m ||mu_y,m - H mu_x,m||^2 + eps(H)``.

    ``means`` is a sequence of ``(mu_y, mu_x)`` vectors. ``nu = 0`` reproduces
    :func:`pgd_identify` exactly.
    """
    if nu < 0:
        raise ValueError("nu must be >= 0")
    return _multi_start(pairs, config or PgdConfig(), seed, _means_terms(means, nu), select_fn)
