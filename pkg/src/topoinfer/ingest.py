"""Windowed aggregation of timestamped node events into per-process covariance pairs.

Events are rows ``node, timestamp, value``. For every calendar day assigned to
a process, values inside the input window are summed per node to form one input
signal and values inside the output window form the matching output signal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .diffusion import CovariancePair, sample_covariance


class IngestError(ValueError):
    """Malformed events file or grouping specification."""


@dataclass
class ProcessSpec:
    label: str
    weekdays: list[int]


@dataclass
class GroupingSpec:
    """Process split by weekday plus the input/output time windows (``[start, end)``)."""

    processes: list[ProcessSpec]
    input_window: tuple[time, time]
    output_window: tuple[time, time]
    nodes: list[str] | None = None
    center: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "GroupingSpec":
        try:
            procs = [ProcessSpec(str(p["label"]), [int(d) for d in p["weekdays"]]) for p in data["processes"]]
            win_in = tuple(time.fromisoformat(t) for t in data["input_window"])
            win_out = tuple(time.fromisoformat(t) for t in data["output_window"])
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"invalid grouping spec: {exc}") from None
        if not procs:
            raise IngestError("grouping spec needs at least one process")
        if any(not 0 <= d <= 6 for p in procs for d in p.weekdays):
            raise IngestError("weekdays are integers 0 (Monday) to 6 (Sunday)")
        for name, (a, b) in (("input_window", win_in), ("output_window", win_out)):
            if not a < b:
                raise IngestError(f"{name} must have start < end")
        nodes = data.get("nodes")
        return cls(procs, win_in, win_out, [str(n) for n in nodes] if nodes is not None else None,
                   bool(data.get("center", False)))

    @classmethod
    def weekday_weekend(cls, input_window=("06:00", "11:00"), output_window=("15:00", "20:00"),
                        nodes=None) -> "GroupingSpec":
        return cls.from_dict({
            "processes": [{"label": "weekday", "weekdays": [0, 1, 2, 3, 4]},
                          {"label": "weekend", "weekdays": [5, 6]}],
            "input_window": list(input_window), "output_window": list(output_window), "nodes": nodes,
        })


@dataclass
class ProcessSignals:
    label: str
    days: list[date]
    inputs: np.ndarray
    outputs: np.ndarray
    pair: CovariancePair = field(repr=False)


def read_events(path) -> list[tuple[str, datetime, float]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"node", "timestamp", "value"} - set(reader.fieldnames or [])
        if missing:
            raise IngestError(f"events file lacks columns {sorted(missing)}")
        for k, r in enumerate(reader, start=2):
            try:
                rows.append((r["node"].strip(), datetime.fromisoformat(r["timestamp"].strip()), float(r["value"])))
            except (ValueError, AttributeError) as exc:
                raise IngestError(f"line {k}: {exc}") from None
    return rows


def _in_window(t: time, win: tuple[time, time]) -> bool:
    return win[0] <= t < win[1]


def aggregate(events: Sequence[tuple[str, datetime, float]], spec: GroupingSpec) -> list[ProcessSignals]:
    """Per-process input/output signal matrices (nodes x days) and their sample covariances."""
    if spec.nodes is not None:
        nodes = spec.nodes
        known = set(nodes)
        unknown = sorted({e[0] for e in events} - known)
        if unknown:
            raise IngestError(f"unknown node ids: {unknown[:10]}")
    else:
        nodes = sorted({e[0] for e in events}, key=_node_key)
    index = {n: i for i, n in enumerate(nodes)}
    out = []
    for proc in spec.processes:
        wd = set(proc.weekdays)
        days = sorted({ts.date() for _, ts, _ in events if ts.weekday() in wd})
        col = {d: j for j, d in enumerate(days)}
        X = np.zeros((len(nodes), len(days)))
        Y = np.zeros((len(nodes), len(days)))
        n_in = n_out = 0
        for node, ts, val in events:
            j = col.get(ts.date())
            if j is None:
                continue
            if _in_window(ts.time(), spec.input_window):
                X[index[node], j] += val
                n_in += 1
            if _in_window(ts.time(), spec.output_window):
                Y[index[node], j] += val
                n_out += 1
        for name, count, win in (("input", n_in, spec.input_window), ("output", n_out, spec.output_window)):
            if count == 0:
                raise IngestError(f"process {proc.label!r}: {name} window "
                                  f"{win[0].isoformat('minutes')}-{win[1].isoformat('minutes')} has no events")
        if spec.center:
            X = X - X.mean(axis=1, keepdims=True)
            Y = Y - Y.mean(axis=1, keepdims=True)
        pair = CovariancePair(sample_covariance(X), sample_covariance(Y), len(days))
        out.append(ProcessSignals(proc.label, days, X, Y, pair))
    return out


def _node_key(n: str):
    return (0, int(n), "") if n.lstrip("-").isdigit() else (1, 0, n)


def ingest_csv(path, spec: GroupingSpec) -> list[ProcessSignals]:
    return aggregate(read_events(path), spec)


def export_events(path, signals: Sequence[tuple[np.ndarray, np.ndarray]], spec: GroupingSpec,
                  start: date = date(2015, 1, 5)) -> None:
    """Write ``(X_m, Y_m)`` signal matrices as events that :func:`ingest_csv` maps back to them.

    Column ``j`` of process ``m`` lands on the ``j``-th calendar day (from
    ``start``) whose weekday belongs to process ``m``; inputs are stamped at
    the start of the input window and outputs at the start of the output window.
    """
    if len(signals) != len(spec.processes):
        raise ValueError("need one (X, Y) pair per process in the grouping spec")
    nodes = spec.nodes
    rows = []
    for (X, Y), proc in zip(signals, spec.processes):
        X = np.atleast_2d(X)
        Y = np.atleast_2d(Y)
        names = nodes if nodes is not None else [str(i) for i in range(X.shape[0])]
        d, used = start, 0
        while used < X.shape[1]:
            if d.weekday() in proc.weekdays:
                t_in = datetime.combine(d, spec.input_window[0])
                t_out = datetime.combine(d, spec.output_window[0])
                for i, name in enumerate(names):
                    rows.append((name, t_in.isoformat(), repr(float(X[i, used]))))
                    rows.append((name, t_out.isoformat(), repr(float(Y[i, used]))))
                used += 1
            d += timedelta(days=1)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "timestamp", "value"])
        w.writerows(rows)
