"""Command-line entry point: ``topoinfer gen | identify | recover | benchmark | ingest``.

Relative output paths are resolved under ``$TOPOINFER_OUTPUT_ROOT`` (default
``./runs``). Exit status is 0 on success, 1 for configuration errors and 2 for
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io
from .experiments import (
    METHODS,
    ConfigError,
    ExperimentConfig,
    generate_instance,
    identify,
    run_benchmark,
    run_ingest_recover,
    summarize,
    sweep_axis,
)
from .filter_linear import extract_spectral_templates
from .graph import ConstraintSet, ConstraintVariant, save_edge_list
from .ingest import GroupingSpec, IngestError, ingest_csv
from .recovery import RecoveryProblem, epsilon_sweep, recover_auto, recover_shift
from .symmetric.common import filter_error

OUTPUT_ROOT_ENV = "TOPOINFER_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("topoinfer")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def resolve_out(path: str | None, default: str) -> Path:
    p = Path(path) if path else Path(default)
    return p if p.is_absolute() else output_root() / p


def load_config_file(path) -> dict:
    """Read a YAML (or ``.json``) configuration mapping."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return data


def load_experiment(path) -> ExperimentConfig:
    """Parse an experiment config; a relative ``ingest.events`` path is taken from the config's directory."""
    data = load_config_file(path)
    ingest = data.get("ingest")
    if isinstance(ingest, dict) and ingest.get("events") and not Path(ingest["events"]).is_absolute():
        data["ingest"] = {**ingest, "events": str(Path(path).parent / ingest["events"])}
    return ExperimentConfig.from_dict(data)


def _point_name(seed, M, P) -> str:
    return f"seed{seed}_M{M}" + (f"_P{P}" if P is not None else "")


def cmd_gen(args) -> int:
    cfg = load_experiment(args.config)
    if args.P is not None and args.P <= 0:
        raise ConfigError("P must be positive")
    if args.M is not None and args.M <= 0:
        raise ConfigError("M must be positive")
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    points = cfg.sweep()
    if args.M is not None:
        points = [(args.M, args.P)]
    out = resolve_out(args.out, f"datasets/{cfg.experiment}")
    for seed in seeds:
        for M, P in points:
            inst = generate_instance(cfg, seed, M, P)
            path = io.save_dataset(out / _point_name(seed, M, P), inst, cfg.to_dict())
            print(path)
    return EXIT_OK


def cmd_identify(args) -> int:
    man = io.load_manifest(args.dataset)
    inst = io.load_dataset(args.dataset)
    cfg_dict = dict(man.get("config") or {"experiment": "symmetric-compare"})
    cfg_dict.setdefault("experiment", "symmetric-compare")
    if cfg_dict["experiment"] == "ingest-recover":
        cfg_dict["experiment"] = "symmetric-compare"
        cfg_dict.pop("ingest", None)
    cfg_dict["methods"] = []
    solver = dict(cfg_dict.get("solver") or {})
    if args.restarts is not None:
        solver["restarts"] = args.restarts
    if args.L is not None:
        solver["L"] = args.L
    cfg_dict["solver"] = solver
    cfg = ExperimentConfig.from_dict(cfg_dict)
    seed = args.seed if args.seed is not None else int(man.get("seed", 0))
    H = identify(inst, args.method, cfg, seed)
    out = resolve_out(args.out, str(Path(args.dataset).resolve() / f"identify_{args.method}"))
    out.mkdir(parents=True, exist_ok=True)
    io.save_filter(out / "filter.csv", H)
    diag = dict(H.diagnostics)
    if inst.filter is not None:
        diag["filter_error"] = filter_error(H.matrix, inst.filter.matrix)
    diag.update(method=args.method, seed=seed, dataset=str(Path(args.dataset).resolve()))
    io.write_json(out / "diagnostics.json", diag)
    print(out / "filter.csv")
    return EXIT_OK


def _parse_epsilon(value: str):
    if value == "auto":
        return "auto"
    try:
        eps = float(value)
    except ValueError:
        raise ConfigError(f"epsilon must be 'auto' or a number, got {value!r}") from None
    if eps < 0:
        raise ConfigError("epsilon must be nonnegative")
    return eps


def cmd_recover(args) -> int:
    eps = _parse_epsilon(args.epsilon)
    try:
        cs = ConstraintSet(ConstraintVariant(args.constraint))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    H = io.load_filter(args.filter)
    truth = io.load_matrix(args.truth, square=True) if args.truth else None
    templates = extract_spectral_templates(H, warn=False)
    out = resolve_out(args.out, str(Path(args.filter).resolve().parent / "recover"))
    out.mkdir(parents=True, exist_ok=True)
    if args.sweep:
        start, stop, step = args.sweep
        if step <= 0 or stop < start or start < 0:
            raise ConfigError("sweep needs 0 <= START <= STOP and STEP > 0")
        grid = np.round(np.arange(start, stop + step / 2, step), 12)
        sw = epsilon_sweep(templates, cs, grid, truth)
        io.write_dicts(out / "sweep.csv", sw.rows)
        io.write_json(out / "sweep_summary.json", {"rows": len(sw.rows), "smallest_feasible": sw.smallest_feasible})
        print(out / "sweep.csv")
        return EXIT_OK
    if eps == "auto":
        res = recover_auto(templates, cs)
    else:
        res = recover_shift(RecoveryProblem(templates, eps, constraint_set=cs))
    report = res.report(truth)
    io.write_json(out / "report.json", report)
    if res.S is not None:
        save_edge_list(res.S, out / "edges.txt", tol=args.edge_tol)
        io.save_matrix(out / "shift.csv", res.S)
    print(out / "report.json")
    if not res.feasible:
        log.error("recovery infeasible: %s", res.message)
        return EXIT_RUNTIME
    return EXIT_OK


def _write_benchmark(out: Path, cfg: ExperimentConfig, rows, figure: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_rows(out / "results.csv", rows)
    summary = summarize(rows)
    io.write_dicts(out / "summary.csv", summary)
    io.write_json(out / "config.json", cfg.to_dict())
    if figure:
        from .plotting import plot_summary

        plot_summary(summary, sweep_axis(cfg), out / "summary.png", title=cfg.experiment)


def cmd_benchmark(args) -> int:
    cfg = load_experiment(args.config)
    out = resolve_out(args.out, f"benchmarks/{cfg.experiment}")
    if cfg.experiment == "ingest-recover":
        rows, res = run_ingest_recover(cfg)
        out.mkdir(parents=True, exist_ok=True)
        io.write_rows(out / "results.csv", rows)
        io.write_json(out / "config.json", cfg.to_dict())
        if res is not None and res.S is not None:
            io.save_matrix(out / "shift.csv", res.S)
            save_edge_list(res.S, out / "edges.txt", tol=1e-6)
        print(out / "results.csv")
        return EXIT_OK

    def progress(row):
        log.info("%s seed=%d M=%d P=%s %s topo=%.3e (%s)", row.experiment, row.seed, row.M, row.P, row.method,
                 row.topology_error, row.status)

    rows = run_benchmark(cfg, progress)
    _write_benchmark(out, cfg, rows, not args.no_figure)
    failed = sum(r.status == "failed" for r in rows)
    for s in summarize(rows):
        print(f"{s['method']:>10} M={s['M']:<3} P={str(s['P']):<6} topology {s['topology_mean']:.3e} "
              f"+/- {s['topology_std']:.1e}  (n={s['n']}, failed={s['failed']})")
    print(out / "results.csv")
    if failed:
        log.warning("%d of %d runs failed; see the status column", failed, len(rows))
    return EXIT_OK


def cmd_ingest(args) -> int:
    try:
        spec = GroupingSpec.from_dict(load_config_file(args.grouping))
    except IngestError as exc:
        raise ConfigError(str(exc)) from None
    procs = ingest_csv(args.events, spec)
    out = resolve_out(args.out, "ingested")
    out.mkdir(parents=True, exist_ok=True)
    files = io.save_pairs(out, [p.pair for p in procs])
    n = procs[0].pair.n
    io.write_json(out / io.MANIFEST, {
        "experiment": "ingest-recover", "kind": "covariances", "n": n, "M": len(procs),
        "P": min(p.pair.samples for p in procs), "seed": 0, "files": files,
        "labels": [p.label for p in procs], "days": [len(p.days) for p in procs], "config": {},
    })
    for p in procs:
        print(f"{p.label}: {len(p.days)} days, {n} nodes")
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="topoinfer", description="Network topology inference from diffused graph signals.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="materialize synthetic datasets from a config file")
    g.add_argument("config")
    g.add_argument("--seed", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--P", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("identify", help="estimate the diffusion filter of a dataset")
    i.add_argument("dataset")
    i.add_argument("--method", required=True, choices=METHODS)
    i.add_argument("--seed", type=int)
    i.add_argument("--restarts", type=int)
    i.add_argument("--L", type=int, help="rounding draws for sdr")
    i.add_argument("--out")
    i.set_defaults(func=cmd_identify)

    r = sub.add_parser("recover", help="recover a sparse shift from a filter's eigenvectors")
    r.add_argument("filter")
    r.add_argument("--constraint", default="adjacency-SA", choices=[v.value for v in ConstraintVariant])
    r.add_argument("--epsilon", default="auto")
    r.add_argument("--sweep", nargs=3, type=float, metavar=("START", "STOP", "STEP"))
    r.add_argument("--truth", help="ground-truth shift CSV for error reporting")
    r.add_argument("--edge-tol", type=float, default=1e-6)
    r.add_argument("--out")
    r.set_defaults(func=cmd_recover)

    b = sub.add_parser("benchmark", help="run a full experiment sweep")
    b.add_argument("config")
    b.add_argument("--out")
    b.add_argument("--no-figure", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    n = sub.add_parser("ingest", help="aggregate an events CSV into covariance pairs")
    n.add_argument("events")
    n.add_argument("--grouping", required=True)
    n.add_argument("--out")
    n.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure maps to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
