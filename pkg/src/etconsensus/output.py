"""CSV writers for traces, certificates and metrics.

Floats are written with 12 significant digits so reruns are byte-identical
and files stay readable.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clock_sync import virtual_clocks
from .engine import Trace
from .lyapunov import lyapunov_series

METRIC_COLUMNS = ("law", "lambda", "sigma", "seed", "n_events", "t_con", "energy", "h2sq")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\r\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) for v in row])
    return path


def write_events(path, trace: Trace) -> Path:
    rows = ((ev.t, agent + 1, cause) for ev in trace.events for agent, cause in zip(ev.agents, ev.causes))
    return write_rows(path, ("t", "agent", "cause"), rows)


def write_segments(path, trace: Trace) -> Path:
    n = trace.n
    header = ["t_start", "t_end"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(n)]
    rows = ([t0, t1, *x, *u] for t0, t1, x, u in zip(trace.t_start, trace.t_end, trace.x_start, trace.u))
    return write_rows(path, header, rows)


def write_lyapunov(path, trace: Trace, lam: float | None = None) -> Path:
    t, a, b, c = lyapunov_series(trace, lam)
    return write_rows(path, ("t", "V1", "V2", "Vlambda"), zip(t, a, b, c))


def write_clocks(path, trace: Trace, gamma, n_samples: int = 501) -> Path:
    n = trace.n
    times = np.linspace(0.0, trace.horizon, n_samples)
    local, virtual, y = virtual_clocks(trace, gamma, times)
    header = (["t"] + [f"l_{i + 1}" for i in range(n)] + [f"T_{i + 1}" for i in range(n)]
              + [f"y_{i + 1}" for i in range(n)])
    rows = ([t, *li, *vi, *yi] for t, li, vi, yi in zip(times, local, virtual, y))
    return write_rows(path, header, rows)


def write_metrics(path, rows: Iterable[dict], columns: Sequence[str] = METRIC_COLUMNS) -> Path:
    return write_rows(path, columns, ([row.get(c) for c in columns] for row in rows))
