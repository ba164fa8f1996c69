"""Dataset directories: matrices as CSV, a JSON manifest, and result tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .diffusion import CovariancePair, GraphFilter
from .graph import load_gso_json, save_gso_json

MANIFEST = "manifest.json"


class DataFormatError(ValueError):
    """A dataset or filter file is missing or malformed."""


def save_matrix(path, M: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(M), delimiter=",", fmt="%.17g")


def load_matrix(path, square: bool = False) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot parse matrix file {path}: {exc}") from None
    if not np.all(np.isfinite(M)):
        raise DataFormatError(f"{path} contains non-finite entries")
    if square and M.shape[0] != M.shape[1]:
        raise DataFormatError(f"{path} holds a {M.shape[0]}x{M.shape[1]} matrix; expected square")
    return M


def write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def save_dataset(out_dir, inst, config_dict: dict | None = None) -> Path:
    """Write an :class:`~topoinfer.experiments.Instance` with its manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_gso_json(inst.shift, out / "graph.json")
    save_matrix(out / "truth.csv", inst.truth)
    save_matrix(out / "filter_true.csv", inst.filter.matrix)
    manifest = {
        "experiment": inst.experiment, "seed": inst.seed, "M": inst.M, "P": inst.P, "n": inst.shift.n,
        "config": config_dict or {},
    }
    if inst.X is not None:
        save_matrix(out / "X.csv", inst.X)
        save_matrix(out / "Y.csv", inst.Y)
        manifest.update(kind="pairs", files={"X": "X.csv", "Y": "Y.csv"})
    else:
        manifest.update(kind="covariances", files=save_pairs(out, inst.pairs))
    write_json(out / MANIFEST, manifest)
    return out


def save_pairs(out_dir, pairs) -> dict:
    out = Path(out_dir)
    files = {"pairs": []}
    for m, p in enumerate(pairs, start=1):
        fx, fy = f"cx_{m}.csv", f"cy_{m}.csv"
        save_matrix(out / fx, p.c_x)
        save_matrix(out / fy, p.c_y_hat)
        files["pairs"].append({"c_x": fx, "c_y": fy, "samples": p.samples})
    return files


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / MANIFEST
    try:
        with open(path) as fh:
            man = json.load(fh)
    except FileNotFoundError:
        raise DataFormatError(f"no {MANIFEST} in {dataset_dir}") from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"corrupt manifest {path}: {exc}") from None
    if man.get("kind") not in ("pairs", "covariances"):
        raise DataFormatError(f"manifest {path} has unknown kind {man.get('kind')!r}")
    return man


def load_dataset(dataset_dir):
    """Rebuild an Instance-like object from a dataset directory (ground truth optional)."""
    from .experiments import Instance

    d = Path(dataset_dir)
    man = load_manifest(d)
    X = Y = pairs = None
    if man["kind"] == "pairs":
        X = load_matrix(d / man["files"]["X"])
        Y = load_matrix(d / man["files"]["Y"])
    else:
        pairs = []
        for entry in man["files"]["pairs"]:
            try:
                pairs.append(CovariancePair(load_matrix(d / entry["c_x"], True), load_matrix(d / entry["c_y"], True),
                                            entry.get("samples")))
            except ValueError as exc:
                raise DataFormatError(str(exc)) from None
    shift = load_gso_json(d / "graph.json") if (d / "graph.json").exists() else None
    truth = load_matrix(d / "truth.csv") if (d / "truth.csv").exists() else None
    H = load_filter(d / "filter_true.csv") if (d / "filter_true.csv").exists() else None
    return Instance(man.get("experiment", "external"), man.get("seed", 0), man.get("M", 0), man.get("P"),
                    shift, truth, H, X=X, Y=Y, pairs=pairs)


def save_filter(path, H: GraphFilter) -> None:
    save_matrix(path, H.matrix)


def load_filter(path) -> GraphFilter:
    M = load_matrix(path, square=True)
    try:
        return GraphFilter(M)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_rows(path, rows) -> None:
    """Dataclass rows to CSV with a header; NaN is written as an empty field."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in fields(rows[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in rows:
            d = asdict(r)
            w.writerow([_cell(d[k]) for k in names])


def write_dicts(path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("no rows to write")
    names = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in rows:
            w.writerow([_cell(r.get(k)) for k in names])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v
