"""Graph-shift operators, admissible sets, graph sources and error metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import networkx as nx
import numpy as np

from .linalg import SYM_TOL, check_symmetric, symmetrize


class GsoKind(str, Enum):
    ADJACENCY = "adjacency"
    LAPLACIAN = "laplacian"
    NORMALIZED_LAPLACIAN = "normalized-laplacian"
    GENERIC = "generic-symmetric"


@dataclass(frozen=True)
class Gso:
    """Symmetric graph-shift operator tagged with what it represents."""

    matrix: np.ndarray
    kind: GsoKind = GsoKind.ADJACENCY

    def __post_init__(self):
        M = check_symmetric(self.matrix, name="GSO")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "kind", GsoKind(self.kind))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def edges(self, tol: float = 0.0) -> list[tuple[int, int, float]]:
        """Upper-triangle nonzero off-diagonal entries as ``(i, j, w)``."""
        S = self.matrix
        i, j = np.triu_indices(self.n, k=1)
        w = S[i, j]
        keep = np.abs(w) > tol
        return [(int(a), int(b), float(c)) for a, b, c in zip(i[keep], j[keep], w[keep])]

    @property
    def n_edges(self) -> int:
        return len(self.edges())

    def to_json(self) -> dict:
        return {"n": self.n, "kind": self.kind.value, "triplets": [list(t) for t in self._triplets()]}

    def _triplets(self):
        S = self.matrix
        for i in range(self.n):
            if S[i, i] != 0:
                yield (i, i, float(S[i, i]))
        yield from self.edges()

    @classmethod
    def from_json(cls, data: dict) -> "Gso":
        n = int(data["n"])
        S = np.zeros((n, n))
        for i, j, w in data["triplets"]:
            S[int(i), int(j)] = w
            S[int(j), int(i)] = w
        return cls(S, GsoKind(data.get("kind", "adjacency")))


class ConstraintVariant(str, Enum):
    ADJACENCY = "adjacency-SA"
    NORMALIZED_LAPLACIAN = "normalized-laplacian-SL"


@dataclass(frozen=True)
class ConstraintSet:
    """Convex set of admissible shifts.

    ``adjacency-SA``: nonnegative, symmetric, zero diagonal, and the weighted
    degree of ``scale_node`` equal to one. ``normalized-laplacian-SL``:
    symmetric, nonpositive off-diagonal, unit diagonal, with the eigenvalue
    attached to the constant-sign template pinned to zero during recovery.
    """

    variant: ConstraintVariant = ConstraintVariant.ADJACENCY
    scale_node: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", ConstraintVariant(self.variant))


@dataclass
class ValidationReport:
    passed: bool
    violations: dict[str, float] = field(default_factory=dict)

    def failed(self) -> list[str]:
        return [k for k, v in self.violations.items() if v > 0]


def constraint_violations(S: np.ndarray, cs: ConstraintSet) -> dict[str, float]:
    """Magnitude of each constraint's violation (0 when satisfied exactly)."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    off = ~np.eye(n, dtype=bool)
    out = {"symmetry": float(np.max(np.abs(S - S.T))) if S.size else 0.0}
    if cs.variant == ConstraintVariant.ADJACENCY:
        out["nonnegativity"] = float(max(0.0, -S[off].min())) if n > 1 else 0.0
        out["zero-diagonal"] = float(np.max(np.abs(np.diag(S)))) if n else 0.0
        out["scale"] = float(abs(S[:, cs.scale_node].sum() - 1.0))
    else:
        out["nonpositive-offdiagonal"] = float(max(0.0, S[off].max())) if n > 1 else 0.0
        out["unit-diagonal"] = float(np.max(np.abs(np.diag(S) - 1.0))) if n else 0.0
    return out


def validate(S, cs: ConstraintSet | None = None, tol: float = 1e-6) -> ValidationReport:
    """Check ``S`` (array or :class:`Gso`) against a constraint set."""
    cs = cs or ConstraintSet()
    M = S.matrix if isinstance(S, Gso) else np.asarray(S, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("validate needs a square matrix")
    viol = constraint_violations(M, cs)
    viol = {k: (v if v > tol else 0.0) for k, v in viol.items()}
    return ValidationReport(passed=all(v == 0.0 for v in viol.values()), violations=viol)


def validate_kind(g: Gso, tol: float = SYM_TOL) -> bool:
    """Structural check of a :class:`Gso` against its declared kind."""
    S = g.matrix
    off = ~np.eye(g.n, dtype=bool)
    if g.kind == GsoKind.ADJACENCY:
        return bool(np.all(S >= -tol) and np.all(np.abs(np.diag(S)) <= tol))
    if g.kind == GsoKind.LAPLACIAN:
        return bool(np.all(np.abs(S.sum(axis=1)) <= tol * max(1.0, np.abs(S).max())) and np.all(S[off] <= tol))
    if g.kind == GsoKind.NORMALIZED_LAPLACIAN:
        d = np.diag(S)
        return bool(np.all(S[off] <= tol) and np.all((np.abs(d - 1) <= tol) | (np.abs(d) <= tol)))
    return True


def scale_to_degree(S: np.ndarray, node: int = 0) -> np.ndarray:
    """Rescale so the weighted degree of ``node`` is one."""
    S = np.asarray(S, dtype=float)
    d = S[:, node].sum()
    if abs(d) < 1e-300:
        raise ValueError(f"node {node} has zero weighted degree; cannot fix scale")
    return S / d


def scale_to_total(S: np.ndarray) -> np.ndarray:
    """Alternative normalization: total edge weight (sum of all entries / 2) equal to one."""
    S = np.asarray(S, dtype=float)
    t = np.abs(S).sum() / 2.0
    if t == 0:
        raise ValueError("cannot normalize an all-zero matrix")
    return S / t


def recovery_error(S_est: np.ndarray, S_true: np.ndarray) -> float:
    """Relative Frobenius error ``||S_est - S_true||_F / ||S_true||_F``."""
    S_est = np.asarray(S_est, dtype=float)
    S_true = np.asarray(S_true, dtype=float)
    if S_est.shape != S_true.shape:
        raise ValueError(f"shape mismatch {S_est.shape} vs {S_true.shape}")
    denom = np.linalg.norm(S_true)
    if denom == 0:
        raise ValueError("ground truth is all zeros")
    return float(np.linalg.norm(S_est - S_true) / denom)


def laplacian(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.diag(A.sum(axis=1)) - A


def normalized_laplacian(A: np.ndarray) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}`` with isolated nodes getting a zero row."""
    A = np.asarray(A, dtype=float)
    d = A.sum(axis=1)
    inv = np.zeros_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    L = np.diag((d > 0).astype(float)) - inv[:, None] * A * inv[None, :]
    return symmetrize(L)


def shift_from_normalized_laplacian(L_n) -> Gso:
    """``S = I - L_n / lambda_max(L_n)``; spectrum of ``S`` lies in ``[0, 1]``."""
    L = L_n.matrix if isinstance(L_n, Gso) else check_symmetric(L_n, name="normalized Laplacian")
    w = np.linalg.eigvalsh(L)
    lam_max = float(w[-1])
    if lam_max <= 1e-12:
        raise ValueError("normalized Laplacian has no positive eigenvalue (empty graph?)")
    if w[0] < -1e-8 * lam_max:
        raise ValueError(f"normalized Laplacian is not PSD (min eigenvalue {w[0]:.3e})")
    S = np.eye(L.shape[0]) - L / lam_max
    return Gso(symmetrize(S), GsoKind.GENERIC)


def erdos_renyi(n: int, p: float, seed=None, max_tries: int = 1000) -> Gso:
    """Connected unweighted G(n, p) adjacency, redrawn until connected."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    for _ in range(max_tries):
        A = np.zeros((n, n))
        A[iu] = (rng.random(iu[0].size) < p).astype(float)
        A = A + A.T
        if n == 1 or nx.is_connected(nx.from_numpy_array(A)):
            return Gso(A, GsoKind.ADJACENCY)
    raise RuntimeError(f"no connected G({n}, {p}) graph after {max_tries} draws")


def karate_club() -> Gso:
    """Zachary's karate club (34 nodes, 78 unweighted edges)."""
    G = nx.karate_club_graph()
    A = nx.to_numpy_array(G, nodelist=sorted(G.nodes()), weight=None)
    return Gso(A, GsoKind.ADJACENCY)


class EdgeListError(ValueError):
    pass


def load_edge_list(path, weighted: bool = False, one_indexed: bool = False, n: int | None = None) -> Gso:
    """Read ``i j [w]`` lines into a symmetric adjacency.

    Blank lines and ``#`` comments are skipped. Repeating an edge is an
    error, as is an index outside ``[0, n)`` when ``n`` is given.
    """
    entries: dict[tuple[int, int], float] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) < 2 or len(parts) > 3:
            raise EdgeListError(f"{path}:{lineno}: expected 'i j [w]', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if (weighted and len(parts) == 3) else 1.0
        except ValueError as exc:
            raise EdgeListError(f"{path}:{lineno}: cannot parse {raw!r}") from exc
        if one_indexed:
            i, j = i - 1, j - 1
        if i < 0 or j < 0 or (n is not None and (i >= n or j >= n)):
            raise EdgeListError(f"{path}:{lineno}: node index out of range in {raw!r}")
        if i == j:
            raise EdgeListError(f"{path}:{lineno}: self-loops are not supported")
        key = (min(i, j), max(i, j))
        if key in entries:
            raise EdgeListError(f"{path}:{lineno}: duplicate edge {key}")
        entries[key] = w
    size = n if n is not None else (max(max(k) for k in entries) + 1 if entries else 0)
    A = np.zeros((size, size))
    for (i, j), w in entries.items():
        A[i, j] = A[j, i] = w
    return Gso(A, GsoKind.ADJACENCY)


def save_edge_list(g, path, tol: float = 0.0) -> None:
    S = g.matrix if isinstance(g, Gso) else np.asarray(g)
    G = g if isinstance(g, Gso) else Gso(S, GsoKind.GENERIC)
    lines = [f"{i} {j} {w:.17g}" for i, j, w in G.edges(tol)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def save_gso_json(g: Gso, path) -> None:
    Path(path).write_text(json.dumps(g.to_json(), indent=1))


def load_gso_json(path) -> Gso:
    return Gso.from_json(json.loads(Path(path).read_text()))


def support(S: np.ndarray, rel_tol: float = 1e-4) -> np.ndarray:
    """Boolean off-diagonal support, treating ``|S_ij| < rel_tol * max|S|`` as zero."""
    S = np.asarray(S, dtype=float)
    m = np.abs(S).max() if S.size else 0.0
    mask = np.abs(S) >= rel_tol * m if m > 0 else np.zeros_like(S, dtype=bool)
    np.fill_diagonal(mask, False)
    return mask
