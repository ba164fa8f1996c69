"""Recover a sparse graph-shift operator from spectral templates.

Solves

    min_{S, lam}  f(S)   s.t.  S in C,  d(S, V diag(lam) V^T) <= eps

for an adjacency-type or normalized-Laplacian-type convex set ``C``. At
``eps == 0`` the shift is a linear function of ``lam`` and the l1 problem is a
linear program, solved exactly. For ``eps > 0`` an ADMM splitting alternates
projections onto ``C`` and onto the eps-neighbourhood of the template
subspace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .graph import ConstraintSet, ConstraintVariant, constraint_violations, recovery_error
from .linalg import khatri_rao, null_space, symmetrize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralTemplates:
    """Orthonormal eigenbasis (columns) estimated from a filter."""

    basis: np.ndarray
    eigen_gaps: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    degenerate: bool = False

    def __post_init__(self):
        V = np.asarray(self.basis, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("template basis must be square")
        if np.linalg.norm(V.T @ V - np.eye(V.shape[0])) > 1e-8:
            raise ValueError("template basis is not orthonormal")
        object.__setattr__(self, "basis", V)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_basis(cls, V) -> "SpectralTemplates":
        return cls(np.asarray(V, dtype=float))


class Objective(str, Enum):
    L1 = "l1"
    FROBENIUS = "frobenius"
    LINF = "linf"


class Distance(str, Enum):
    FROBENIUS = "frobenius"
    SPECTRAL = "spectral"


@dataclass
class RecoveryProblem:
    templates: SpectralTemplates
    epsilon: float = 0.0
    objective: Objective = Objective.L1
    constraint_set: ConstraintSet = field(default_factory=ConstraintSet)
    distance: Distance = Distance.FROBENIUS

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError("epsilon must be finite and >= 0")
        self.objective = Objective(self.objective)
        self.distance = Distance(self.distance)
        if self.objective == Objective.LINF:
            raise NotImplementedError("the l-infinity criterion is not supported")


@dataclass
class SolverSettings:
    tol: float = 1e-7
    max_iters: int = 50_000
    rho: float = 1.0
    adapt_until: int = 50_000
    feas_tol: float = 1e-7
    # distance slack accepted when declaring an ADMM solution feasible
    dist_rtol: float = 1e-4


@dataclass
class RecoveryResult:
    S: np.ndarray | None
    eigenvalues: np.ndarray | None
    feasible: bool
    objective: float
    distance: float
    epsilon: float
    iterations: int = 0
    converged: bool = True
    method: str = "lp"
    violation: float = 0.0
    message: str = ""

    def report(self, truth: np.ndarray | None = None) -> dict:
        out = {
            "epsilon": self.epsilon,
            "objective": self.objective,
            "error": None,
            "feasible": self.feasible,
            "iterations": self.iterations,
            "converged": self.converged,
            "distance": self.distance,
            "method": self.method,
            "violation": self.violation,
            "message": self.message,
        }
        if truth is not None and self.S is not None:
            out["error"] = recovery_error(self.S, truth)
        return out


# ---------------------------------------------------------------------------
# constraint-set geometry


def _project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum(w) = total}``."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, v.size + 1)
    cond = u - css / k > 0
    r = k[cond][-1]
    theta = css[r - 1] / r
    return np.maximum(v - theta, 0.0)


def project_constraint_set(M: np.ndarray, cs: ConstraintSet) -> np.ndarray:
    """Euclidean projection of a square matrix onto the constraint set."""
    W = symmetrize(np.asarray(M, dtype=float))
    n = W.shape[0]
    if cs.variant == ConstraintVariant.ADJACENCY:
        S = np.maximum(W, 0.0)
        np.fill_diagonal(S, 0.0)
        s = cs.scale_node
        others = np.arange(n) != s
        row = _project_simplex(W[s, others])
        S[s, others] = row
        S[others, s] = row
        return S
    S = np.minimum(W, 0.0)
    np.fill_diagonal(S, 1.0)
    return S


def _linear_cost(n: int, cs: ConstraintSet) -> tuple[np.ndarray, float]:
    """``(C, c0)`` with ``||S||_1 = <C, S> + c0`` on the constraint set."""
    off = np.ones((n, n)) - np.eye(n)
    if cs.variant == ConstraintVariant.ADJACENCY:
        return off, 0.0
    return -off, float(n)


def pinned_template(V: np.ndarray) -> int:
    """Index of the template closest to having entries of a single sign."""
    score = np.abs(V.sum(axis=0)) / np.abs(V).sum(axis=0)
    return int(np.argmax(score))


def _pins(V: np.ndarray, cs: ConstraintSet) -> dict[int, float]:
    # the normalized Laplacian's null eigenvector is the positive one; pin its eigenvalue to 0
    if cs.variant == ConstraintVariant.NORMALIZED_LAPLACIAN:
        return {pinned_template(V): 0.0}
    return {}


def _template_projection(A: np.ndarray, V: np.ndarray, pins: dict[int, float]):
    """Split ``V^T A V`` into the best template eigenvalues and the residual."""
    At = V.T @ A @ V
    lam = np.diag(At).copy()
    for k, val in pins.items():
        lam[k] = val
    R = At - np.diag(lam)
    return lam, R


def template_distance(S: np.ndarray, V: np.ndarray, cs: ConstraintSet, distance: Distance = Distance.FROBENIUS,
                      lam: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Distance from ``S`` to ``V diag(lam) V^T``.

    Without ``lam`` the Frobenius-optimal eigenvalues are used, which gives
    the exact minimum for the Frobenius distance and an upper bound for the
    spectral one.
    """
    pins = _pins(V, cs)
    if lam is None:
        lam, R = _template_projection(S, V, pins)
    else:
        R = V.T @ S @ V - np.diag(lam)
    if distance == Distance.FROBENIUS:
        return float(np.linalg.norm(R)), lam
    return float(np.linalg.norm(R, 2)), lam


def _project_template_ball(A, V, eps, pins, distance, E0=None, inner: int = 50):
    """Project ``A`` onto ``{V diag(lam) V^T + E : d(E) <= eps}``; returns ``(Z, lam, E_rot)``."""
    At = V.T @ A @ V
    n = At.shape[0]
    pin_idx = np.array(sorted(pins), dtype=int)
    pin_val = np.array([pins[k] for k in sorted(pins)])
    if distance == Distance.FROBENIUS:
        lam = np.diag(At).copy()
        lam[pin_idx] = pin_val
        R = At - np.diag(lam)
        nr = np.linalg.norm(R)
        if nr > eps:
            R = R * (eps / nr) if nr > 0 else R
        Zt = np.diag(lam) + R
        return symmetrize(V @ Zt @ V.T), lam, R
    # spectral ball: block-coordinate minimization over (lam, E)
    E = np.zeros((n, n)) if E0 is None else E0
    lam = np.diag(At - E).copy()
    for _ in range(inner):
        lam = np.diag(At - E).copy()
        lam[pin_idx] = pin_val
        D = At - np.diag(lam)
        w, Q = np.linalg.eigh(symmetrize(D))
        E_new = symmetrize((Q * np.clip(w, -eps, eps)) @ Q.T)
        if np.linalg.norm(E_new - E) < 1e-12 * max(1.0, np.linalg.norm(E)):
            E = E_new
            break
        E = E_new
    lam = np.diag(At - E).copy()
    lam[pin_idx] = pin_val
    Zt = np.diag(lam) + E
    return symmetrize(V @ Zt @ V.T), lam, E


def minimal_distance(V: np.ndarray, cs: ConstraintSet, max_iters: int = 20_000, tol: float = 1e-12):
    """Smallest Frobenius distance between the constraint set and the template subspace.

    Accelerated projected gradient on ``0.5 * dist(S, span)^2`` over the
    constraint set. Returns ``(distance, S)``.
    """
    n = V.shape[0]
    pins = _pins(V, cs)

    def resid(S):
        lam, R = _template_projection(S, V, pins)
        return R

    # start from the projection of the best template-subspace point of the all-ones matrix
    S = project_constraint_set(np.ones((n, n)) / max(n - 1, 1), cs)
    Y, t = S.copy(), 1.0
    f_prev = np.inf
    for _ in range(max_iters):
        R = resid(Y)
        grad = V @ R @ V.T
        S_new = project_constraint_set(Y - grad, cs)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        Y = S_new + ((t - 1) / t_new) * (S_new - S)
        f = float(np.linalg.norm(resid(S_new)))
        if f > f_prev:
            # restart momentum on increase
            Y, t_new = S_new.copy(), 1.0
        if abs(f_prev - f) <= tol * max(1.0, f) and np.linalg.norm(S_new - S) <= tol * max(1.0, np.linalg.norm(S)):
            S = S_new
            break
        S, t, f_prev = S_new, t_new, f
    return float(np.linalg.norm(resid(S))), S


# ---------------------------------------------------------------------------
# eps = 0: linear program over the eigenvalues


def _solve_exact(problem: RecoveryProblem, settings: SolverSettings) -> RecoveryResult:
    V = problem.templates.basis
    cs = problem.constraint_set
    n = V.shape[0]
    K = khatri_rao(V, V)  # vec(S) = K @ lam
    # vec is column-major: flat index k -> (row k % n, col k // n)
    r_idx, c_idx = np.arange(n * n) % n, np.arange(n * n) // n
    diag_rows = K[r_idx == c_idx]
    iu = np.triu_indices(n, k=1)
    off_rows = K[iu[1] * n + iu[0]]
    pins = _pins(V, cs)

    C, c0 = _linear_cost(n, cs)
    cost = K.T @ C.reshape(-1, order="F")
    if cs.variant == ConstraintVariant.ADJACENCY:
        s = cs.scale_node
        scale_row = K[(c_idx == s) & (r_idx != s)].sum(axis=0)
        A_eq = np.vstack([diag_rows, scale_row])
        b_eq = np.concatenate([np.zeros(n), [1.0]])
        G, h = -off_rows, np.zeros(off_rows.shape[0])
    else:
        pin_rows = np.eye(n)[sorted(pins)]
        A_eq = np.vstack([diag_rows, pin_rows])
        b_eq = np.concatenate([np.ones(n), [pins[k] for k in sorted(pins)]])
        G, h = off_rows, np.zeros(off_rows.shape[0])

    lam0, *_ = np.linalg.lstsq(A_eq, b_eq, rcond=None)
    eq_resid = float(np.linalg.norm(A_eq @ lam0 - b_eq)) / max(1.0, float(np.linalg.norm(b_eq)))
    if eq_resid > settings.feas_tol:
        return RecoveryResult(None, None, False, np.inf, np.inf, 0.0, method="lp",
                              message=f"infeasible: equality constraints inconsistent (residual {eq_resid:.2e})")
    Z = null_space(A_eq, rank_tol=1e-9)
    if Z.shape[1] == 0:
        lam = lam0
        viol = float(max(0.0, np.max(G @ lam - h)))
        if viol > settings.feas_tol:
            return RecoveryResult(None, None, False, np.inf, np.inf, 0.0, method="lp",
                                  message="infeasible: unique equality solution violates sign constraints")
    else:
        res = linprog(Z.T @ cost, A_ub=G @ Z, b_ub=h - G @ lam0, bounds=[(None, None)] * Z.shape[1], method="highs")
        if res.status == 2:
            return RecoveryResult(None, None, False, np.inf, np.inf, 0.0, method="lp", message="infeasible: " + res.message)
        if res.status != 0:
            return RecoveryResult(None, None, False, np.inf, np.inf, 0.0, method="lp", converged=False,
                                  message=f"LP solver failed: {res.message}")
        lam = lam0 + Z @ res.x
    S = symmetrize((V * lam) @ V.T)
    viol = max(constraint_violations(S, cs).values())
    obj = float(np.abs(S).sum()) if problem.objective == Objective.L1 else float(np.linalg.norm(S))
    return RecoveryResult(S, lam, viol <= 1e-6, obj, 0.0, 0.0, method="lp", violation=viol,
                          message="ok" if viol <= 1e-6 else f"constraint violation {viol:.2e}")


# ---------------------------------------------------------------------------
# eps > 0: ADMM


def _solve_admm(problem: RecoveryProblem, settings: SolverSettings, warm: RecoveryResult | None = None) -> RecoveryResult:
    V = problem.templates.basis
    cs = problem.constraint_set
    eps = problem.epsilon
    n = V.shape[0]
    pins = _pins(V, cs)
    C, _ = _linear_cost(n, cs)
    rho = settings.rho
    if warm is not None and warm.S is not None:
        Z = warm.S.copy()
    else:
        Z = project_constraint_set(np.zeros((n, n)), cs)
    U = np.zeros((n, n))
    E = None
    S = Z
    converged = False
    it = 0
    next_adapt = 20
    for it in range(1, settings.max_iters + 1):
        if problem.objective == Objective.L1:
            S = project_constraint_set(Z - U - C / rho, cs)
        else:
            S = project_constraint_set(rho * (Z - U) / (1.0 + rho), cs)
        Z_prev = Z
        Z, lam, E = _project_template_ball(S + U, V, eps, pins, problem.distance, E0=E)
        U = U + S - Z
        r = np.linalg.norm(S - Z)
        s = rho * np.linalg.norm(Z - Z_prev)
        scale = max(1.0, np.linalg.norm(S))
        if r + s < settings.tol * scale:
            converged = True
            break
        if it == next_adapt:
            # residual balancing on a geometric schedule; frequent updates make ADMM oscillate
            next_adapt = 2 * it if it < settings.adapt_until else -1
            if r > 5 * s or s > 5 * r:
                factor = float(np.clip(np.sqrt(r / max(s, 1e-300)), 0.1, 10.0))
                rho *= factor
                U /= factor
    if problem.distance == Distance.FROBENIUS:
        dist, lam = template_distance(S, V, cs)
    else:
        dist, lam = template_distance(S, V, cs, problem.distance, lam=lam)
    viol = max(constraint_violations(S, cs).values())
    feasible = dist <= eps * (1 + settings.dist_rtol) + settings.feas_tol
    obj = float(np.abs(S).sum()) if problem.objective == Objective.L1 else float(np.linalg.norm(S))
    msg = "ok" if feasible else f"infeasible: distance {dist:.3e} exceeds epsilon {eps:.3e}"
    if not converged:
        msg += " (iteration limit reached)"
    return RecoveryResult(S, lam, feasible, obj, dist, eps, iterations=it, converged=converged,
                          method="admm", violation=viol, message=msg)


def recover_shift(problem: RecoveryProblem, settings: SolverSettings | None = None,
                  warm: RecoveryResult | None = None) -> RecoveryResult:
    """Solve the template-constrained sparse shift recovery problem.

    Infeasibility is reported through ``result.feasible`` together with the
    minimal-violation iterate rather than raised.
    """
    settings = settings or SolverSettings()
    V = problem.templates.basis
    cs = problem.constraint_set
    if problem.epsilon == 0 and problem.objective == Objective.L1 and problem.distance == Distance.FROBENIUS:
        res = _solve_exact(problem, settings)
        if not res.feasible and res.S is None:
            d, S_close = minimal_distance(V, cs)
            res.S, res.distance = S_close, d
            res.eigenvalues = template_distance(S_close, V, cs)[1]
        return res
    if problem.distance == Distance.FROBENIUS:
        d_min, S_close = minimal_distance(V, cs)
        if problem.epsilon < d_min * (1 - 1e-6) - settings.feas_tol:
            lam = template_distance(S_close, V, cs)[1]
            return RecoveryResult(S_close, lam, False, float(np.abs(S_close).sum()), d_min, problem.epsilon,
                                  method="admm", converged=True,
                                  message=f"infeasible: epsilon {problem.epsilon:.3e} below minimal distance {d_min:.3e}")
    return _solve_admm(problem, settings, warm)


def recover_shift_laplacian(problem: RecoveryProblem, settings: SolverSettings | None = None) -> RecoveryResult:
    """Normalized-Laplacian variant: unit diagonal, nonpositive off-diagonal, pinned null template."""
    cs = ConstraintSet(ConstraintVariant.NORMALIZED_LAPLACIAN)
    p = RecoveryProblem(problem.templates, problem.epsilon, problem.objective, cs, problem.distance)
    return recover_shift(p, settings)


def auto_epsilon(templates: SpectralTemplates, cs: ConstraintSet, factor: float = 2.0, zero_tol: float = 1e-9) -> float:
    """Pick the ball radius as ``factor`` times the smallest feasible radius (0 if templates are consistent)."""
    d_min, _ = minimal_distance(templates.basis, cs)
    return 0.0 if d_min <= zero_tol else factor * d_min


def recover_auto(templates: SpectralTemplates, cs: ConstraintSet | None = None, factor: float = 2.0,
                 settings: SolverSettings | None = None) -> RecoveryResult:
    """Recover with :func:`auto_epsilon`, falling back to the ADMM path if the exact LP is infeasible."""
    cs = cs or ConstraintSet()
    eps = auto_epsilon(templates, cs, factor)
    res = recover_shift(RecoveryProblem(templates, eps, constraint_set=cs), settings)
    if not res.feasible and eps == 0.0:
        d_min, _ = minimal_distance(templates.basis, cs)
        eps = max(factor * d_min, 1e-8)
        res = recover_shift(RecoveryProblem(templates, eps, constraint_set=cs), settings)
    return res


@dataclass
class SweepResult:
    rows: list[dict]
    smallest_feasible: float | None


def epsilon_sweep(templates: SpectralTemplates, cs: ConstraintSet | None, grid, truth: np.ndarray | None = None,
                  settings: SolverSettings | None = None) -> SweepResult:
    """Run :func:`recover_shift` over an increasing grid of radii."""
    grid = [float(e) for e in grid]
    if not grid:
        raise ValueError("epsilon grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be non-decreasing")
    cs = cs or ConstraintSet()
    rows, warm, smallest = [], None, None
    for eps in grid:
        res = recover_shift(RecoveryProblem(templates, eps, constraint_set=cs), settings, warm=warm)
        rows.append(res.report(truth if res.feasible else None))
        if res.feasible:
            warm = res if res.method == "admm" else None
            if smallest is None:
                smallest = eps
    return SweepResult(rows, smallest)
