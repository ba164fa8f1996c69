"""Seeded experiment protocols: instance generation, identification, recovery and result rows.

Every protocol is split into ``generate_instance`` (graph, filter and data for
one seed and sweep point), ``identify`` (filter estimate) and
``recover_topology`` so that the CLI can replay any benchmark row step by step.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .diffusion import (
    CovariancePair,
    GraphFilter,
    add_noise,
    exact_pairs,
    fir_filter,
    iir_filter,
    random_coefficients,
    random_spd_covariance,
    sampled_pairs,
    uniform_inputs,
)
from .filter_linear import extract_spectral_templates, identify_asymmetric, identify_ls
from .filter_psd import identify_psd_multi, identify_psd_single
from .graph import (
    ConstraintSet,
    ConstraintVariant,
    Gso,
    erdos_renyi,
    karate_club,
    load_edge_list,
    normalized_laplacian,
    recovery_error,
    scale_to_degree,
    shift_from_normalized_laplacian,
)
from .linalg import symmetrize
from .recovery import RecoveryProblem, SolverSettings, recover_auto, recover_shift
from .symmetric.common import filter_error
from .symmetric.pgd import PgdConfig, pgd_identify
from .symmetric.sdp import SdpConfig
from .symmetric.sdr import sdr_identify

EXPERIMENTS = ("linear-io", "psd-karate", "symmetric-compare", "budget-tradeoff", "ingest-recover")
METHODS = ("ls", "asym", "psd", "pgd", "sdr", "stationary")
PAIR_METHODS = ("ls", "asym")
COVARIANCE_METHODS = ("psd", "pgd", "sdr", "stationary")


class ConfigError(ValueError):
    """Invalid experiment or command configuration."""


_DEFAULTS: dict[str, dict[str, Any]] = {
    "linear-io": {"graph": {"kind": "er", "n": 20, "p": 0.3}, "M": [5, 10, 15, 20, 25, 30], "methods": ["ls"]},
    "psd-karate": {"graph": {"kind": "karate"}, "M": [1, 5, 10], "P": [100, 1000, 10000], "methods": ["psd"]},
    "symmetric-compare": {"graph": {"kind": "er", "n": 15, "p": 0.3}, "M": list(range(2, 11)),
                          "methods": ["pgd", "sdr"]},
    "budget-tradeoff": {"graph": {"kind": "er", "n": 15, "p": 0.3}, "M": [2, 3, 4, 5], "budget": [4000],
                        "methods": ["sdr"]},
    "ingest-recover": {"graph": {"kind": "none"}, "M": [2], "methods": ["sdr"]},
}

# Full-size problem dimensions, used when ``full_scale: true``; graphs must then come from local files.
_FULL_SCALE = {"linear-io": 49, "symmetric-compare": 66, "budget-tradeoff": 31}


@dataclass
class ExperimentConfig:
    """Declarative description of one benchmark.

    ``graph``: ``{"kind": "er", "n", "p"}``, ``{"kind": "karate"}`` or
    ``{"kind": "edgelist", "path", "one_indexed", "weighted"}``.
    ``filter``: ``{"kind": "fir", "coeffs": "random-uniform" | [h0, ...], "taps"}``
    or ``{"kind": "iir", "alpha": float | "random-uniform"}``.
    ``P`` lists sample sizes (empty means exact covariances); ``budget`` lists
    totals ``M x P`` and overrides ``P``.
    """

    experiment: str
    graph: dict = field(default_factory=dict)
    filter: dict = field(default_factory=lambda: {"kind": "fir", "coeffs": "random-uniform", "taps": 3})
    M: list[int] = field(default_factory=list)
    P: list[int] = field(default_factory=list)
    budget: list[int] = field(default_factory=list)
    noise_db: float = -math.inf
    seeds: list[int] = field(default_factory=lambda: list(range(5)))
    methods: list[str] = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    constraint: str = ""
    epsilon: float | str = "auto"
    condition_cap: float = 10.0
    full_scale: bool = False
    ingest: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        defaults = _DEFAULTS[self.experiment]
        self.graph = dict(self.graph or defaults["graph"])
        self.M = [int(m) for m in (self.M or defaults["M"])]
        self.P = [int(p) for p in (self.P or defaults.get("P", []))]
        self.budget = [int(b) for b in (self.budget or defaults.get("budget", []))]
        self.methods = list(self.methods or defaults["methods"])
        self.seeds = [int(s) for s in self.seeds]
        if not self.constraint:
            self.constraint = "normalized-laplacian-SL" if self.experiment == "psd-karate" else "adjacency-SA"
        self.noise_db = float(self.noise_db) if self.noise_db is not None else -math.inf
        if self.full_scale and self.experiment in _FULL_SCALE and self.graph.get("kind") == "er":
            self.graph["n"] = _FULL_SCALE[self.experiment]
        self._validate()

    def _validate(self):
        if not self.seeds:
            raise ConfigError("seeds must be a non-empty list")
        for name in ("M", "P", "budget"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ConfigError(f"{name} values must be positive")
        if not self.M:
            raise ConfigError("M must be a non-empty list")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if self.experiment == "linear-io" and any(m not in PAIR_METHODS for m in self.methods):
            raise ConfigError("linear-io supports methods 'ls' and 'asym'")
        if self.experiment != "linear-io" and any(m in PAIR_METHODS for m in self.methods):
            raise ConfigError(f"{self.experiment} works from covariances; methods 'ls'/'asym' need input-output pairs")
        kind = self.graph.get("kind")
        if kind not in ("er", "karate", "edgelist", "none"):
            raise ConfigError(f"unknown graph kind {kind!r}")
        if kind == "er":
            n, p = self.graph.get("n", 0), self.graph.get("p", 0.3)
            if int(n) < 2 or not 0 < float(p) <= 1:
                raise ConfigError("er graph needs n >= 2 and 0 < p <= 1")
        if kind == "edgelist" and not self.graph.get("path"):
            raise ConfigError("edgelist graph needs a path")
        fk = self.filter.get("kind", "fir")
        if fk not in ("fir", "iir"):
            raise ConfigError(f"unknown filter kind {fk!r}")
        try:
            ConstraintVariant(self.constraint)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (self.epsilon == "auto" or (isinstance(self.epsilon, (int, float)) and self.epsilon >= 0)):
            raise ConfigError("epsilon must be 'auto' or a nonnegative number")
        if self.experiment == "ingest-recover" and not self.ingest.get("events"):
            raise ConfigError("ingest-recover needs ingest.events (CSV path) and ingest.grouping")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("configuration needs an 'experiment' key")
        data = dict(data)
        for key in ("M", "P", "budget", "seeds", "methods"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def sweep(self) -> list[tuple[int, int | None]]:
        """``(M, P)`` points; ``P`` is ``None`` for noiseless pairs or exact covariances."""
        if self.budget:
            return [(m, b // m) for b in self.budget for m in self.M]
        if self.P:
            return [(m, p) for p in self.P for m in self.M]
        return [(m, None) for m in self.M]

    def pgd_config(self) -> PgdConfig:
        keys = ("eta", "mu", "beta", "delta", "restarts", "max_iters", "selection")
        return PgdConfig(**{k: self.solver[k] for k in keys if k in self.solver})

    def sdp_config(self) -> SdpConfig:
        s = self.solver.get("sdp", {})
        return SdpConfig(**s)

    def rounding_draws(self) -> int:
        default = 10 if self.experiment == "budget-tradeoff" else 100
        return int(self.solver.get("L", default))

    def constraint_set(self) -> ConstraintSet:
        return ConstraintSet(ConstraintVariant(self.constraint))


@dataclass
class ResultRow:
    experiment: str
    seed: int
    M: int
    P: int | None
    method: str
    filter_error: float
    topology_error: float
    runtime_ms: float
    status: str = "ok"
    diagnostics: str = "{}"

    def __post_init__(self):
        for name in ("filter_error", "topology_error"):
            v = getattr(self, name)
            if not (math.isnan(v) or v >= 0):
                raise ValueError(f"{name} must be nonnegative")


@dataclass
class Instance:
    """Ground truth and observations for one (seed, M, P) point."""

    experiment: str
    seed: int
    M: int
    P: int | None
    shift: Gso
    truth: np.ndarray
    filter: GraphFilter
    X: np.ndarray | None = None
    Y: np.ndarray | None = None
    pairs: list[CovariancePair] | None = None


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(t) for t in tags]])


def build_graph(config: ExperimentConfig, seed: int) -> Gso:
    g = config.graph
    kind = g.get("kind")
    if kind == "er":
        return erdos_renyi(int(g["n"]), float(g.get("p", 0.3)), seed=_rng(seed, 0))
    if kind == "karate":
        return karate_club()
    if kind == "edgelist":
        return load_edge_list(g["path"], weighted=bool(g.get("weighted", False)),
                              one_indexed=bool(g.get("one_indexed", False)), n=g.get("n"))
    raise ConfigError(f"experiment {config.experiment} needs a graph")


def build_filter(config: ExperimentConfig, S: np.ndarray, seed: int) -> GraphFilter:
    spec = config.filter
    rng = _rng(seed, 1)
    if spec.get("kind", "fir") == "iir":
        alpha = spec.get("alpha", "random-uniform")
        if alpha != "random-uniform":
            return iir_filter(S, float(alpha))
        for _ in range(100):
            try:
                return iir_filter(S, rng.uniform(0.0, 1.0))
            except ValueError:
                continue  # I + alpha S singular for this draw; draw again
        raise ConfigError("could not draw a nonsingular IIR filter in 100 attempts")
    coeffs = spec.get("coeffs", "random-uniform")
    if coeffs == "random-uniform":
        coeffs = random_coefficients(int(spec.get("taps", 3)), seed=rng)
    return fir_filter(S, np.asarray(coeffs, dtype=float))


def _karate_shift() -> tuple[Gso, np.ndarray, np.ndarray]:
    """``(graph, shift I - L_n / lambda_max, L_n)`` for the karate protocol."""
    g = karate_club()
    L_n = normalized_laplacian(g.matrix)
    return g, shift_from_normalized_laplacian(L_n).matrix, L_n


def generate_instance(config: ExperimentConfig, seed: int, M: int, P: int | None) -> Instance:
    """Deterministic ground truth and data for one sweep point."""
    exp = config.experiment
    if exp == "ingest-recover":
        raise ConfigError("ingest-recover has no synthetic generator; use the ingest command")
    if exp == "psd-karate":
        g, S, truth = _karate_shift()
    else:
        g = build_graph(config, seed)
        S = g.matrix
        truth = scale_to_degree(S, config.constraint_set().scale_node)
    H = build_filter(config, S, seed)
    n = g.n
    if exp == "linear-io":
        X = uniform_inputs(n, M, seed=_rng(seed, 2, M))
        Y = H.matrix @ X
        if np.isfinite(config.noise_db):
            Y = add_noise(Y, config.noise_db, _rng(seed, 3, M))
        return Instance(exp, seed, M, P, g, truth, H, X=X, Y=Y)
    covs = [random_spd_covariance(n, config.condition_cap, seed=_rng(seed, 2, m)) for m in range(M)]
    if P is None:
        pairs = exact_pairs(H, covs)
    else:
        pairs = sampled_pairs(H, covs, P, seed=_rng(seed, 3, M, P), noise_db=config.noise_db)
    return Instance(exp, seed, M, P, g, truth, H, pairs=pairs)


def identify(inst_or_data, method: str, config: ExperimentConfig | None = None, seed: int = 0) -> GraphFilter:
    """Dispatch to an identification method; ``inst_or_data`` is an :class:`Instance`."""
    config = config or ExperimentConfig("symmetric-compare")
    inst = inst_or_data
    if method in PAIR_METHODS:
        if inst.X is None:
            raise ConfigError(f"method {method!r} needs input-output pairs")
        if method == "ls":
            return identify_ls(inst.X, inst.Y)
        H = identify_asymmetric(inst.X, inst.Y)
        return GraphFilter(symmetrize(H), None, diagnostics={"method": "asym", "asymmetry": float(np.linalg.norm(H - H.T))})
    if inst.pairs is None:
        raise ConfigError(f"method {method!r} needs covariance pairs")
    pairs = inst.pairs
    if method == "psd":
        return identify_psd_single(pairs[0]) if len(pairs) == 1 else identify_psd_multi(pairs)
    if method == "pgd":
        return pgd_identify(pairs, config.pgd_config(), seed=_rng(seed, 4))
    if method == "sdr":
        if len(pairs) < 2:
            raise ConfigError("method 'sdr' needs at least two covariance pairs (M >= 2)")
        return sdr_identify(pairs, config.rounding_draws(), seed=_rng(seed, 5), solver_config=config.sdp_config())
    if method == "stationary":
        C = symmetrize(sum(p.c_y_hat for p in pairs) / len(pairs))
        return GraphFilter(C, None, diagnostics={"method": "stationary"})
    raise ConfigError(f"unknown method {method!r}")


def recover_topology(H: GraphFilter, config: ExperimentConfig, settings: SolverSettings | None = None):
    """Spectral templates of ``H`` followed by sparse shift recovery."""
    templates = extract_spectral_templates(H, warn=False)
    cs = config.constraint_set()
    if config.epsilon == "auto":
        return recover_auto(templates, cs, settings=settings)
    return recover_shift(RecoveryProblem(templates, float(config.epsilon), constraint_set=cs), settings)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def run_point(config: ExperimentConfig, seed: int, M: int, P: int | None, method: str) -> ResultRow:
    """One pipeline run; failures become flagged rows rather than exceptions."""
    t0 = time.perf_counter()
    try:
        inst = generate_instance(config, seed, M, P)
        H = identify(inst, method, config, seed)
        if method == "stationary":
            ferr = math.nan
        elif method in PAIR_METHODS:
            ferr = float(np.linalg.norm(H.matrix - inst.filter.matrix) / np.linalg.norm(inst.filter.matrix))
        else:
            ferr = filter_error(H.matrix, inst.filter.matrix)
        res = recover_topology(H, config)
        terr = recovery_error(res.S, inst.truth) if res.S is not None else math.nan
        diag = {k: v for k, v in H.diagnostics.items() if k not in ("objective_trace", "signs")}
        diag["recovery"] = res.report()
        status = "ok" if res.feasible else "infeasible"
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - partial failures are recorded and the sweep continues
        ferr = terr = math.nan
        diag = {"error": f"{type(exc).__name__}: {exc}"}
        status = "failed"
    ms = (time.perf_counter() - t0) * 1e3
    return ResultRow(config.experiment, seed, M, P, method, ferr, terr, ms, status,
                     json.dumps(diag, default=_json_default, sort_keys=True))


def run_benchmark(config: ExperimentConfig, progress=None) -> list[ResultRow]:
    rows = []
    for M, P in config.sweep():
        for method in config.methods:
            if method == "sdr" and M < 2:
                continue
            for seed in config.seeds:
                row = run_point(config, seed, M, P, method)
                rows.append(row)
                if progress is not None:
                    progress(row)
    return rows


def summarize(rows: list[ResultRow], x: str | None = None) -> list[dict]:
    """Mean and std of each error per ``(method, M, P)``; ``x`` names the sweep axis."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.M, r.P), []).append(r)
    out = []
    for (method, M, P), rs in groups.items():
        t = np.array([r.topology_error for r in rs], dtype=float)
        f = np.array([r.filter_error for r in rs], dtype=float)
        ok = ~np.isnan(t)
        out.append({
            "method": method, "M": M, "P": P,
            "budget": M * P if P is not None else None,
            "n": int(ok.sum()), "failed": int((~ok).sum()),
            "topology_mean": float(t[ok].mean()) if ok.any() else math.nan,
            "topology_std": float(t[ok].std()) if ok.any() else math.nan,
            "filter_mean": float(np.nanmean(f)) if np.any(~np.isnan(f)) else math.nan,
            "filter_std": float(np.nanstd(f)) if np.any(~np.isnan(f)) else math.nan,
        })
    return out


def sweep_axis(config: ExperimentConfig) -> str:
    if config.budget:
        return "budget"
    if config.P:
        return "P"
    return "M"


def run_ingest_recover(config: ExperimentConfig):
    """Events CSV -> covariance pairs -> filter -> sparse shift; returns ``(rows, recovery result)``.

    There is no ground truth, so error columns are NaN; the diagnostics carry
    the covariance residual and recovery report.
    """
    from .ingest import GroupingSpec, ingest_csv

    spec = GroupingSpec.from_dict(config.ingest.get("grouping", {}))
    procs = ingest_csv(config.ingest["events"], spec)
    pairs = [p.pair for p in procs]
    inst = Instance(config.experiment, config.seeds[0], len(pairs), min(p.samples for p in pairs),
                    None, None, None, pairs=pairs)
    rows, result = [], None
    for method in config.methods:
        t0 = time.perf_counter()
        H = identify(inst, method, config, config.seeds[0])
        result = recover_topology(H, config)
        diag = {k: v for k, v in H.diagnostics.items() if k not in ("objective_trace", "signs")}
        diag["recovery"] = result.report()
        diag["labels"] = [p.label for p in procs]
        rows.append(ResultRow(config.experiment, config.seeds[0], len(pairs), inst.P, method, math.nan, math.nan,
                              (time.perf_counter() - t0) * 1e3, "ok" if result.feasible else "infeasible",
                              json.dumps(diag, default=_json_default, sort_keys=True)))
    return rows, result
