"""Acceptance checks, one per criterion, each printing a single PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -v``) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import LAMBDAS, NETS, make_law, random_x0  # noqa: E402
from helpers import max_mean_drift, threshold_gaps  # noqa: E402

from etconsensus import cli  # noqa: E402
from etconsensus.clock_sync import BENCHMARK_GAMMA, ClockModel, run_clock_sync  # noqa: E402
from etconsensus.engine import DEFAULT_EVENT_CAP, run_event_driven, run_fixed_step_oracle  # noqa: E402
from etconsensus.lyapunov import exp_rate, fitted_log_slope, lyapunov_series, monotonicity_report, v2dot_bound_check  # noqa: E402
from etconsensus.output import write_clocks  # noqa: E402
from etconsensus.triggers import dwell_bounds, validate_and_derive  # noqa: E402

HORIZON = 50.0
SEEDS = range(5)
SIGMA = 0.5


def report(number: int, passed: bool, detail: str) -> bool:
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}", flush=True)
    return passed


@functools.lru_cache(maxsize=None)
def base_runs():
    """4 networks x 3 laws x 5 initial conditions at sigma = 0.5, horizon 50."""
    runs = []
    for name in NETS:
        for lam in LAMBDAS:
            g, law = make_law(name, lam, SIGMA)
            for seed in SEEDS:
                t0 = time.perf_counter()
                tr = run_event_driven(g, law, random_x0(seed), HORIZON)
                runs.append((name, lam, seed, tr, time.perf_counter() - t0))
    return tuple(runs)


def criterion_1() -> bool:
    runs = base_runs()
    drift = max(max_mean_drift(tr) for *_, tr, _ in runs)
    slowest = max(dt for *_, dt in runs)
    ok = drift <= 1e-9 and slowest < 1.0
    return report(1, ok, f"{len(runs)} runs, max |mean(x)-mean(x0)| = {drift:.2e} (<= 1e-9), "
                         f"slowest run {slowest:.3f} s (< 1 s)")


def criterion_2() -> bool:
    reps = [(name, lam, seed, monotonicity_report(tr)) for name, lam, seed, tr, _ in base_runs()]
    failed = [(n, l, s) for n, l, s, r in reps if not r.passed]
    worst = max(r.max_increase for *_, r in reps)
    return report(2, not failed, f"{len(reps) - len(failed)}/{len(reps)} monotone, "
                                 f"largest increase {worst:.2e} (<= 1e-9); failures {failed}")


def criterion_3() -> bool:
    samples = violations = 0
    worst = -np.inf
    for name, lam, seed, tr, _ in base_runs():
        if lam != 0.0:
            continue
        for k in range(tr.n_segments):
            for frac in (0.0, 1 / 3, 2 / 3, 1.0):
                x = tr.x_start[k] + tr.u[k] * frac * (tr.t_end[k] - tr.t_start[k])
                lhs, rhs, ok = v2dot_bound_check(tr.graph, tr.law, x, tr.xhat[k])
                samples += 1
                violations += not ok
                worst = max(worst, lhs - rhs)
    ok = samples >= 10_000 and violations == 0
    return report(3, ok, f"{samples} sampled instants on lambda=0 runs, {violations} violations, "
                         f"max(lhs - rhs) = {worst:.2e}")


def criterion_4() -> bool:
    short, n_gaps, max_events = [], 0, 0
    for name, lam, seed, tr, _ in base_runs():
        tau = [dwell_bounds(tr.law, tr.graph, i)[0] for i in range(tr.n)]
        max_events = max(max_events, sum(len(e.agents) for e in tr.events))
        for i, gap, heard in threshold_gaps(tr):
            n_gaps += 1
            if gap < tau[i] - 1e-9:
                short.append((name, lam, seed, i + 1, round(gap, 9), round(tau[i], 9), heard))
    g, law = make_law("net3", 0.0, SIGMA)
    spike = np.array([1.0, 0, 0, 0, 0])
    first = run_event_driven(g, law, spike, 1.0).events[1].t
    oracle = run_fixed_step_oracle(g, law, spike, 1.0, 1e-5).events[1].t
    first_ok = abs(first - np.sqrt(0.125)) <= 1e-9 and abs(oracle - np.sqrt(0.125)) <= 1e-4
    ok = not short and max_events < DEFAULT_EVENT_CAP and first_ok
    return report(4, ok, f"{n_gaps} same-agent threshold gaps, {len(short)} below tau - 1e-9 {short}; "
                         f"max events {max_events} (< 1e6); complete-graph first gap {first:.12f} "
                         f"(oracle {oracle:.5f}) vs sqrt(0.125)")


def criterion_5() -> bool:
    worst, mismatched = 0.0, []
    for name in NETS:
        for lam in (0.0, 1.0):
            g, pure = make_law(name, lam, SIGMA)
            _, comb = make_law(name, lam, SIGMA, kind="combined")
            x0 = random_x0(0)
            a = run_event_driven(g, pure, x0, HORIZON).events
            b = run_event_driven(g, comb, x0, HORIZON).events
            if len(a) != len(b) or any(p.agents != q.agents for p, q in zip(a, b)):
                mismatched.append((name, lam))
                continue
            worst = max(worst, max(abs(p.t - q.t) for p, q in zip(a, b)))
    ok = not mismatched and worst <= 1e-12
    return report(5, ok, f"combined vs pure laws on 4 networks: max event-time difference {worst:.1e}, "
                         f"mismatched sequences {mismatched}")


def criterion_6() -> bool:
    worst_x, worst_count, lines = 0.0, 0, []
    for lam in LAMBDAS:
        g, law = make_law("net1", lam, SIGMA)
        x0 = random_x0(0)
        ev = run_event_driven(g, law, x0, 10.0)
        orc = run_fixed_step_oracle(g, law, x0, 10.0, 1e-5)
        grid = np.linspace(0, 10, 2001)
        diff = max(np.abs(ev.state_at(t) - orc.state_at(t)).max() for t in grid)
        counts = [abs(len(ev.broadcast_times(i)) - len(orc.broadcast_times(i))) for i in range(g.n)]
        worst_x, worst_count = max(worst_x, diff), max(worst_count, max(counts))
        lines.append(f"lambda={lam:g}: sup diff {diff:.1e}")
    ok = worst_x <= 1e-3 and worst_count <= 1
    return report(6, ok, f"net1 horizon 10, dt=1e-5: {', '.join(lines)}; max per-agent count gap {worst_count}")


def criterion_7() -> bool:
    model = ClockModel.create(BENCHMARK_GAMMA)
    parts, ok = [], True
    with tempfile.TemporaryDirectory() as tmp:
        for lam in (1.0, 0.0):
            g, law = make_law("net1", lam, SIGMA)
            run = run_clock_sync(g, law, model, HORIZON)
            rel = run.report.spread_ratio
            path = write_clocks(Path(tmp) / f"clocks_{lam:g}.csv", run.trace, model.gamma)
            last = np.loadtxt(path, delimiter=",", skiprows=1)[-1]
            virt = last[1 + 5:1 + 10]
            local = last[1:1 + 5]
            # coincide: final virtual-clock spread tiny next to the uncontrolled local-clock spread
            coincide = np.ptp(virt) <= 1e-3 * np.ptp(local)
            ok &= rel <= 1e-3 and coincide
            parts.append(f"{law.kind}: y-spread ratio {rel:.1e}, virtual spread at t=50 {np.ptp(virt):.1e} "
                         f"vs local {np.ptp(local):.1f}")
    return report(7, ok, "; ".join(parts))


def criterion_8() -> bool:
    t0 = time.perf_counter()
    means = {}
    for name in NETS:
        for lam in (1.0, 0.0):
            sc = cli.parse_scenario({"network": name, "mode": "clocksync", "horizon": HORIZON, "seed": 0,
                                     "mc_runs": 10, "law": {"lambda": lam, "sigma": SIGMA, "b": "safe", "c": "safe"}})
            g = sc.graph()
            law = cli.build_law(sc, g)
            ms = [cli.execute(sc, g, law, r).metrics for r in range(sc.mc_runs)]
            means[name, lam] = (np.mean([m.n_events for m in ms]), np.mean([m.t_con for m in ms]))
    elapsed = time.perf_counter() - t0
    checks = []
    for name in ("net1", "net2", "net4"):
        (ne1, tc1), (ne2, tc2) = means[name, 1.0], means[name, 0.0]
        checks.append((f"{name} N_e {ne2:.1f} >= {ne1:.1f}", ne2 >= ne1))
        checks.append((f"{name} T_con {tc2:.3f} <= {tc1:.3f}", tc2 <= tc1))
    tc1, tc2 = means["net3", 1.0][1], means["net3", 0.0][1]
    rel = abs(tc2 - tc1) / max(tc1, tc2)
    checks.append((f"net3 T_con {tc2:.3f} vs {tc1:.3f} ({rel:.1%} apart)", rel <= 0.2))
    checks.append((f"runtime {elapsed:.1f} s", elapsed < 120))
    ok = all(c for _, c in checks)
    return report(8, ok, "; ".join(f"{d} {'ok' if c else 'NO'}" for d, c in checks))


def criterion_9() -> bool:
    worst_ratio, worst_slope = 0.0, -np.inf
    for name, lam, seed, tr, _ in base_runs():
        if lam != 0.0:
            continue
        t, _, v2, _ = lyapunov_series(tr)
        worst_ratio = max(worst_ratio, v2[-1] / v2[0])
        worst_slope = max(worst_slope, fitted_log_slope(t, v2))
    rates = {name: exp_rate(*make_law(name, 0.0, SIGMA)) for name in NETS}
    ok = worst_ratio <= 0.01 and worst_slope < 0
    info = ", ".join(f"{k} {v:.4f}" for k, v in rates.items())
    return report(9, ok, f"max V2(50)/V2(0) = {worst_ratio:.2e} (<= 0.01), max fitted log-slope {worst_slope:.3f} "
                         f"(< 0); guaranteed rate A (informational): {info}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 10)])
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        passed = check()
    assert passed


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
