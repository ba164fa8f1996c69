"""Filter identification through the semidefinite relaxation of the sign program."""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from ..diffusion import CovariancePair, GraphFilter
from .bqp import build_bqp, filter_from_signs
from .rounding import randomize_round
from .sdp import SdpConfig, solve_sdp


def sdr_identify(pairs: Sequence[CovariancePair], L: int = 100, seed=None,
                 solver_config: SdpConfig | None = None) -> GraphFilter:
    """Build the sign program, relax, round and average the per-process filters.

    Diagnostics hold the SDP objective and bound, the rounded objective and
    the covariance residual of the returned filter, plus the rank of ``Psi``
    (exact recovery needs ``NM - 1``) and the smallest eigen-gap of the
    whitened output covariances.
    """
    pairs = list(pairs)
    problem = build_bqp(pairs)
    sdp = solve_sdp(problem.gram, solver_config)
    rnd = randomize_round(sdp.B, problem.gram, L, seed)
    H = filter_from_signs(rnd.b, problem, pairs)
    diag = {
        "method": "sdr",
        "objective_trace": [],
        "sdp_objective": sdp.objective,
        "sdp_lower_bound": sdp.lower_bound,
        "sdp_iterations": sdp.iterations,
        "rounding_objective": rnd.objective,
        "residual_eps": H.diagnostics["residual_eps"],
        "converged": sdp.converged,
        "psi_rank": problem.psi_rank,
        "min_eigen_gap": float(min(f.eigen_gaps.min(initial=np.inf) for f in problem.factors)),
        "signs": rnd.b.astype(int).tolist(),
    }
    return GraphFilter(H.matrix, None, H.kind, diagnostics=diag)


def diagnostics_json(f: GraphFilter) -> str:
    """Serialize the standard diagnostics keys of an identified filter."""
    keys = ("objective_trace", "sdp_objective", "rounding_objective", "residual_eps", "converged")
    d = f.diagnostics
    return json.dumps({k: d.get(k) for k in keys})
