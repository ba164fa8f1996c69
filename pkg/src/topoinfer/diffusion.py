"""Forward models: graph filters, covariance propagation and signal simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import ortho_group

from .graph import Gso
from .linalg import check_symmetric, symmetrize


class FilterKind(str, Enum):
    FIR = "fir"
    IIR = "iir"
    RAW = "raw"


@dataclass(frozen=True)
class GraphFilter:
    """Realized symmetric filter matrix, optionally with the coefficients that built it."""

    matrix: np.ndarray
    coeffs: np.ndarray | None = None
    kind: FilterKind = FilterKind.RAW
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_symmetric(self.matrix, name="filter"))
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class CovariancePair:
    """Input covariance and (ensemble or sample) output covariance of one process.

    ``samples`` is the number of output realizations used for ``c_y_hat``, or
    ``None`` when the covariance is exact.
    """

    c_x: np.ndarray
    c_y_hat: np.ndarray
    samples: int | None = None

    def __post_init__(self):
        cx = check_symmetric(self.c_x, name="input covariance")
        cy = check_symmetric(self.c_y_hat, name="output covariance")
        if cx.shape != cy.shape:
            raise ValueError(f"covariance shapes differ: {cx.shape} vs {cy.shape}")
        object.__setattr__(self, "c_x", cx)
        object.__setattr__(self, "c_y_hat", cy)

    @property
    def n(self) -> int:
        return self.c_x.shape[0]


def _shift_matrix(S) -> np.ndarray:
    return S.matrix if isinstance(S, Gso) else check_symmetric(S, name="shift")


def fir_filter(S, h) -> GraphFilter:
    """``H = sum_l h[l] S^l`` evaluated by Horner's rule."""
    S = _shift_matrix(S)
    h = np.atleast_1d(np.asarray(h, dtype=float))
    n = S.shape[0]
    if h.size == 0:
        raise ValueError("need at least one filter coefficient")
    if h.size > n:
        raise ValueError(f"{h.size} taps exceed N={n}; reduce by Cayley-Hamilton")
    H = h[-1] * np.eye(n)
    for c in h[-2::-1]:
        H = H @ S + c * np.eye(n)
    return GraphFilter(symmetrize(H), h, FilterKind.FIR)


def iir_filter(S, alpha: float) -> GraphFilter:
    """``H = (I + alpha S)^{-1}``."""
    S = _shift_matrix(S)
    n = S.shape[0]
    lam = np.linalg.eigvalsh(S)
    resp = 1.0 + alpha * lam
    bad = np.abs(resp) <= 1e-10
    if np.any(bad):
        raise ValueError(f"I + alpha*S is singular: eigenvalue {lam[bad][0]:.6g} of S gives 1 + alpha*lambda = {resp[bad][0]:.3e}")
    H = np.linalg.solve(np.eye(n) + alpha * S, np.eye(n))
    return GraphFilter(symmetrize(H), np.array([alpha]), FilterKind.IIR)


def psd_shift(S, delta: float = 0.1) -> np.ndarray:
    """Shift the spectrum of ``S`` so its smallest eigenvalue becomes ``delta``-positive."""
    S = _shift_matrix(S)
    lam_min = float(np.linalg.eigvalsh(S)[0])
    return S + (abs(lam_min) + delta) * np.eye(S.shape[0])


def _filter_matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, GraphFilter) else check_symmetric(H, name="filter")


def propagate_covariance(H, C_x) -> np.ndarray:
    """Output covariance ``H C_x H`` of a filtered zero-mean process."""
    Hm = _filter_matrix(H)
    C_x = check_symmetric(C_x, name="input covariance")
    if Hm.shape != C_x.shape:
        raise ValueError(f"shape mismatch: filter {Hm.shape}, covariance {C_x.shape}")
    return symmetrize(Hm @ C_x @ Hm)


def _gaussian_inputs(C_x: np.ndarray, P: int, rng: np.random.Generator) -> np.ndarray:
    w, V = np.linalg.eigh(symmetrize(C_x))
    root = V * np.sqrt(np.clip(w, 0.0, None))
    return root @ rng.standard_normal((C_x.shape[0], P))


def noise_power(signal_power: float, noise_db: float) -> float:
    if noise_db is None or np.isneginf(noise_db):
        return 0.0
    return float(signal_power * 10.0 ** (noise_db / 10.0))


def add_noise(Y: np.ndarray, noise_db: float, rng: np.random.Generator, signal_power: float | None = None) -> np.ndarray:
    """Add white Gaussian noise ``noise_db`` decibels relative to the mean per-entry power of ``Y``."""
    if signal_power is None:
        signal_power = float(np.mean(Y ** 2))
    var = noise_power(signal_power, noise_db)
    if var == 0.0:
        return Y
    return Y + np.sqrt(var) * rng.standard_normal(Y.shape)


def simulate_outputs(H, C_x, P: int, noise_db: float = -np.inf, seed=None, return_inputs: bool = False):
    """Draw ``P`` zero-mean Gaussian inputs with covariance ``C_x`` and filter them.

    Noise power is referenced to the ensemble per-entry output power
    ``trace(H C_x H) / N``. Returns the ``N x P`` outputs (and inputs when
    ``return_inputs`` is set).
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    Hm = _filter_matrix(H)
    C_x = check_symmetric(C_x, name="input covariance")
    rng = np.random.default_rng(seed)
    X = _gaussian_inputs(C_x, P, rng)
    Y = Hm @ X
    power = float(np.trace(Hm @ C_x @ Hm)) / Hm.shape[0]
    Y = add_noise(Y, noise_db, rng, signal_power=power)
    return (Y, X) if return_inputs else Y


def uniform_inputs(n: int, m: int, low: float = 0.0, high: float = 100.0, seed=None) -> np.ndarray:
    """``n x m`` inputs with i.i.d. uniform entries (used for input-output pair experiments)."""
    return np.random.default_rng(seed).uniform(low, high, size=(n, m))


def sample_covariance(signals: np.ndarray) -> np.ndarray:
    """``(1/P) Y Y^T`` without mean removal."""
    Y = np.atleast_2d(np.asarray(signals, dtype=float))
    if Y.shape[1] < 1:
        raise ValueError("need at least one sample")
    return symmetrize(Y @ Y.T / Y.shape[1])


def random_spd_covariance(n: int, condition_cap: float = 10.0, seed=None) -> np.ndarray:
    """Random SPD matrix with a Haar-random eigenbasis and condition number at most ``condition_cap``.

    Eigenvalues are ``condition_cap ** u`` with ``u ~ U[0, 1]``.
    """
    if condition_cap < 1:
        raise ValueError("condition_cap must be >= 1")
    rng = np.random.default_rng(seed)
    if condition_cap == 1 or n == 1:
        return np.eye(n)
    lam = condition_cap ** rng.uniform(0.0, 1.0, size=n)
    Q = ortho_group.rvs(n, random_state=rng)
    return symmetrize((Q * lam) @ Q.T)


def random_coefficients(taps: int, seed=None, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(low, high, size=taps)


def exact_pairs(H, covariances) -> list[CovariancePair]:
    return [CovariancePair(C, propagate_covariance(H, C), None) for C in covariances]


def sampled_pairs(H, covariances, P: int, seed=None, noise_db: float = -np.inf) -> list[CovariancePair]:
    """One :class:`CovariancePair` per input covariance, output covariance from ``P`` samples."""
    rng = np.random.default_rng(seed)
    out = []
    for C in covariances:
        Y = simulate_outputs(H, C, P, noise_db=noise_db, seed=rng)
        out.append(CovariancePair(C, sample_covariance(Y), P))
    return out
