"""Scenario files, single runs and parameter sweeps from the command line.

Usage::

    etconsensus run scenario.json [--out DIR]
    etconsensus sweep scenario.json [--out DIR] [--jobs N]
    etconsensus validate scenario.json

The default output directory comes from ``$ETCONSENSUS_OUT`` (else ``./out``).
Exit status: 0 ok, 2 invalid scenario, 3 event safety cap hit.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clock_sync import ClockModel, run_clock_sync
from .engine import DEFAULT_EVENT_CAP, SafetyCapExceeded, Trace, run_event_driven
from .graph import NETWORKS, ConfigurationError, Digraph, build_digraph, network
from .metrics import MetricsReport, compute_metrics
from .output import METRIC_COLUMNS, write_clocks, write_events, write_lyapunov, write_metrics, write_rows, write_segments
from .triggers import KINDS, TriggerLaw, degree_bc, safe_bc, validate_and_derive

log = logging.getLogger(__name__)

ENV_OUT = "ETCONSENSUS_OUT"
EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3
DRIFT_RANGE = (0.7, 1.3)
MODES = ("consensus", "clocksync")
SWEEP_COLUMNS = ("sigma", "lambda", "law", "runs", "converged", "n_events", "t_con", "energy", "h2sq", "status")


class ScenarioError(ConfigurationError):
    """Scenario file is malformed or inconsistent."""


@dataclass(frozen=True)
class LawSpec:
    lam: float
    sigma: object
    kind: str | None = None
    b: object = "degree"
    c: object = "degree"
    eps: object = None


@dataclass(frozen=True)
class Scenario:
    network: str | list
    law: LawSpec
    mode: str = "consensus"
    horizon: float = 50.0
    x0: object = None
    gamma: object = None
    alpha0: object = None
    seed: int = 0
    sweep_sigma: tuple = ()
    sweep_lambda: tuple = ()
    mc_runs: int = 1
    event_cap: int = DEFAULT_EVENT_CAP
    name: str = "scenario"

    def graph(self) -> Digraph:
        if isinstance(self.network, str):
            return network(self.network)
        return build_digraph(np.array(self.network, dtype=float))

    @property
    def is_sweep(self) -> bool:
        return bool(self.sweep_sigma or self.sweep_lambda)

    def cells(self) -> list[tuple[object, float]]:
        sigmas = self.sweep_sigma or (self.law.sigma,)
        lams = self.sweep_lambda or (self.law.lam,)
        return list(itertools.product(sigmas, lams))


def _need(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{where}: {msg}")


def _number_list(value, where: str) -> list[float]:
    _need(isinstance(value, list) and value and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                    for v in value), where, "expected a non-empty list of numbers")
    return [float(v) for v in value]


def _bc_field(value, where: str):
    if value in ("degree", "safe"):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return _number_list(value, where)


def parse_scenario(data: dict, name: str = "scenario") -> Scenario:
    """Validate the JSON structure of a scenario (graph-level checks happen later)."""
    _need(isinstance(data, dict), "<root>", "expected a JSON object")
    known = {"network", "law", "mode", "horizon", "x0", "gamma", "alpha0", "seed", "sweep", "mc_runs",
             "event_cap", "name", "description"}
    unknown = sorted(set(data) - known)
    _need(not unknown, unknown[0] if unknown else "", f"unknown field (allowed: {sorted(known)})")

    _need("network" in data, "network", "missing")
    net = data["network"]
    if isinstance(net, str):
        _need(net in NETWORKS, "network", f"unknown builtin {net!r}, choose from {sorted(NETWORKS)}")
    else:
        _need(isinstance(net, list) and all(isinstance(r, list) for r in net), "network",
              "expected a builtin name or a matrix (array of arrays)")
        for k, row in enumerate(net):
            _number_list(row, f"network[{k}]")

    _need(isinstance(data.get("law"), dict), "law", "missing or not an object")
    law = data["law"]
    bad = sorted(set(law) - {"kind", "lambda", "sigma", "b", "c", "eps"})
    _need(not bad, f"law.{bad[0]}" if bad else "", "unknown field")
    kind = law.get("kind")
    _need(kind is None or kind in KINDS, "law.kind", f"expected one of {KINDS}")
    lam = law.get("lambda", {"alg1": 1.0, "alg2": 0.0}.get(kind))
    _need(isinstance(lam, (int, float)) and not isinstance(lam, bool), "law.lambda", "missing or not a number")
    _need("sigma" in law, "law.sigma", "missing")
    sigma = law["sigma"]
    sigma = float(sigma) if isinstance(sigma, (int, float)) else _number_list(sigma, "law.sigma")
    eps = law.get("eps")
    if eps is not None:
        eps = float(eps) if isinstance(eps, (int, float)) else _number_list(eps, "law.eps")
    spec = LawSpec(lam=float(lam), sigma=sigma, kind=kind, b=_bc_field(law.get("b", "degree"), "law.b"),
                   c=_bc_field(law.get("c", "degree"), "law.c"), eps=eps)

    mode = data.get("mode", "consensus")
    _need(mode in MODES, "mode", f"expected one of {MODES}")
    horizon = data.get("horizon", 50.0)
    _need(isinstance(horizon, (int, float)) and horizon > 0, "horizon", "expected a positive number")

    x0 = data.get("x0")
    gamma = data.get("gamma")
    alpha0 = data.get("alpha0")
    if mode == "consensus":
        _need(x0 is not None, "x0", "required in consensus mode")
        _need(gamma is None and alpha0 is None, "gamma", "clock fields are only valid in clocksync mode")
        if x0 != "random":
            x0 = _number_list(x0, "x0")
    else:
        _need(x0 is None, "x0", "not valid in clocksync mode (use gamma/alpha0)")
        if gamma is not None and gamma != "random":
            gamma = _number_list(gamma, "gamma")
            _need(all(g > 0 for g in gamma), "gamma", "drifts must be positive")
        if alpha0 is not None:
            alpha0 = _number_list(alpha0, "alpha0")

    seed = data.get("seed", 0)
    _need(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0, "seed", "expected an unsigned integer")
    mc_runs = data.get("mc_runs", 1)
    _need(isinstance(mc_runs, int) and mc_runs >= 1, "mc_runs", "expected a positive integer")
    cap = data.get("event_cap", DEFAULT_EVENT_CAP)
    _need(isinstance(cap, int) and cap > 0, "event_cap", "expected a positive integer")

    sweep = data.get("sweep") or {}
    _need(isinstance(sweep, dict), "sweep", "expected an object")
    bad = sorted(set(sweep) - {"sigma", "lambda"})
    _need(not bad, f"sweep.{bad[0]}" if bad else "", "unknown field")
    s_sig = tuple(_number_list(sweep["sigma"], "sweep.sigma")) if "sigma" in sweep else ()
    s_lam = tuple(_number_list(sweep["lambda"], "sweep.lambda")) if "lambda" in sweep else ()
    if s_lam and kind is not None:
        raise ScenarioError("law.kind: cannot fix the law kind while sweeping lambda")

    return Scenario(network=net, law=spec, mode=mode, horizon=float(horizon), x0=x0, gamma=gamma,
                    alpha0=alpha0, seed=seed, sweep_sigma=s_sig, sweep_lambda=s_lam, mc_runs=mc_runs,
                    event_cap=cap, name=data.get("name", name))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data, name=path.stem)


def resolve_bc(value, g: Digraph) -> np.ndarray:
    if isinstance(value, str):
        return degree_bc(g) if value == "degree" else safe_bc(g)
    return np.broadcast_to(np.asarray(value, dtype=float), (g.n,)).copy()


def build_law(sc: Scenario, g: Digraph, sigma=None, lam=None) -> TriggerLaw:
    spec = sc.law
    lam = spec.lam if lam is None else lam
    return validate_and_derive(g, lam, spec.sigma if sigma is None else sigma,
                               b=resolve_bc(spec.b, g), c=resolve_bc(spec.c, g), eps=spec.eps, kind=spec.kind)


def run_stream(seed: int, run_index: int) -> np.random.Generator:
    """Philox4x64 stream for one Monte-Carlo repetition.

    The stream depends only on ``(seed, run_index)``, so every sweep cell sees
    the same random drifts for a given repetition.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index])))


def random_drifts(seed: int, run_index: int, n: int) -> np.ndarray:
    return run_stream(seed, run_index).uniform(*DRIFT_RANGE, size=n)


def initial_values(sc: Scenario, n: int, run_index: int) -> dict:
    """Per-run ``x0`` or ``gamma``/``alpha0``, drawing the random parts."""
    if sc.mode == "consensus":
        if sc.x0 == "random":
            return {"x0": run_stream(sc.seed, run_index).uniform(-1.0, 1.0, size=n)}
        x0 = np.asarray(sc.x0, dtype=float)
        if x0.size != n:
            raise ScenarioError(f"x0: expected {n} entries, got {x0.size}")
        return {"x0": x0}
    gamma = random_drifts(sc.seed, run_index, n) if sc.gamma in (None, "random") else np.asarray(sc.gamma)
    if gamma.size != n:
        raise ScenarioError(f"gamma: expected {n} entries, got {gamma.size}")
    alpha0 = None if sc.alpha0 is None else np.asarray(sc.alpha0, dtype=float)
    if alpha0 is not None and alpha0.size != n:
        raise ScenarioError(f"alpha0: expected {n} entries, got {alpha0.size}")
    return {"gamma": gamma, "alpha0": alpha0}


@dataclass
class RunResult:
    trace: Trace
    metrics: MetricsReport
    gamma: np.ndarray | None


def execute(sc: Scenario, g: Digraph, law: TriggerLaw, run_index: int = 0) -> RunResult:
    init = initial_values(sc, g.n, run_index)
    if sc.mode == "consensus":
        trace = run_event_driven(g, law, init["x0"], sc.horizon, event_cap=sc.event_cap)
        return RunResult(trace, compute_metrics(trace), None)
    model = ClockModel.create(init["gamma"], init["alpha0"])
    run = run_clock_sync(g, law, model, sc.horizon, event_cap=sc.event_cap)
    return RunResult(run.trace, compute_metrics(run.trace, drift=model.gamma), model.gamma)


def metrics_row(law: TriggerLaw, seed: int, m: MetricsReport) -> dict:
    return {"law": law.kind, "lambda": law.lam, "sigma": float(law.sigma[0]) if np.ptp(law.sigma) == 0
            else ";".join(fmt_list(law.sigma)), "seed": seed, "n_events": m.n_events, "t_con": m.t_con,
            "energy": m.energy, "h2sq": m.h2sq}


def fmt_list(values) -> list[str]:
    return [format(float(v), ".12g") for v in values]


def summary_line(m: MetricsReport) -> str:
    t_con = "not reached" if m.t_con is None else f"{m.t_con:.6g}"
    energy = "n/a" if m.energy is None else f"{m.energy:.6g}"
    return f"N_e={m.n_events} T_con={t_con} E={energy} C={m.h2sq:.6g}"


def run_command(sc: Scenario, outdir) -> int:
    outdir = Path(outdir)
    g = sc.graph()
    law = build_law(sc, g)
    res = execute(sc, g, law)
    write_events(outdir / "events.csv", res.trace)
    write_segments(outdir / "segments.csv", res.trace)
    write_lyapunov(outdir / "lyapunov.csv", res.trace)
    write_metrics(outdir / "metrics.csv", [metrics_row(law, sc.seed, res.metrics)])
    if res.gamma is not None:
        write_clocks(outdir / "clocks.csv", res.trace, res.gamma)
    print(f"{sc.name}: {law.describe()} {summary_line(res.metrics)}")
    return EXIT_OK


def _sweep_cell(args):
    sc, sigma, lam = args
    g = sc.graph()
    try:
        law = build_law(sc, g, sigma=sigma, lam=lam)
    except ConfigurationError as exc:
        return None, str(exc), []
    rows = []
    for r in range(sc.mc_runs):
        m = execute(sc, g, law, r).metrics
        rows.append({**metrics_row(law, sc.seed, m), "run": r})
    return law.kind, "ok", rows


def _mean(values):
    # fsum keeps the mean independent of the order runs are listed in
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


def sweep_command(sc: Scenario, outdir, jobs: int = 1) -> list[dict]:
    """Run every (sigma, lambda) cell ``mc_runs`` times and write the cell means."""
    outdir = Path(outdir)
    tasks = [(sc, sigma, lam) for sigma, lam in sc.cells()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    else:
        results = [_sweep_cell(t) for t in tasks]

    table, runs = [], []
    for (_, sigma, lam), (kind, status, rows) in zip(tasks, results):
        runs.extend(rows)
        cell = {"sigma": sigma if np.isscalar(sigma) else ";".join(fmt_list(sigma)), "lambda": lam,
                "law": kind, "runs": len(rows), "converged": sum(r["t_con"] is not None for r in rows),
                "status": status}
        for key in ("n_events", "t_con", "energy", "h2sq"):
            cell[key] = _mean([r[key] for r in rows])
        table.append(cell)
        if status != "ok":
            log.warning("sigma=%s lambda=%s skipped: %s", sigma, lam, status)

    write_metrics(outdir / "metrics.csv", runs, columns=METRIC_COLUMNS + ("run",))
    write_rows(outdir / "sweep.csv", SWEEP_COLUMNS, ([c[k] for k in SWEEP_COLUMNS] for c in table))
    ok = [c for c in table if c["status"] == "ok"]
    print(f"{sc.name}: {len(table)} cells x {sc.mc_runs} runs, {len(ok)} ok; "
          f"mean N_e={_mean([c['n_events'] for c in ok]) or 0:.6g}, results in {outdir / 'sweep.csv'}")
    return table


def validate_command(sc: Scenario) -> int:
    g = sc.graph()
    for sigma, lam in sc.cells():
        law = build_law(sc, g, sigma=sigma, lam=lam)
        initial_values(sc, g.n, 0)
        print(f"ok: {law.describe()} eps={fmt_list(law.eps)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etconsensus",
                                     description="Event-triggered consensus and clock synchronization runs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    default_out = os.environ.get(ENV_OUT, "out")
    p = sub.add_parser("run", help="simulate one scenario and write CSVs")
    p.add_argument("scenario")
    p.add_argument("--out", default=default_out)
    p = sub.add_parser("sweep", help="sigma/lambda grid with Monte-Carlo repetitions")
    p.add_argument("scenario")
    p.add_argument("--out", default=default_out)
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("validate", help="check a scenario without running it")
    p.add_argument("scenario")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = load_scenario(args.scenario)
        if args.command == "run":
            return run_command(sc, args.out)
        if args.command == "sweep":
            if not sc.is_sweep:
                raise ScenarioError("sweep: the scenario has no sweep lists")
            sweep_command(sc, args.out, jobs=max(1, args.jobs))
            return EXIT_OK
        return validate_command(sc)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SafetyCapExceeded as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
