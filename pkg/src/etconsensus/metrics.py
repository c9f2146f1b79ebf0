"""Performance metrics computed from a finished trace.

All integrals are evaluated in closed form segment by segment; the state is
linear in time on every segment so nothing needs numerical quadrature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .engine import INITIAL, Trace
from .lyapunov import segment_quadratics

LN10 = math.log(10.0)


@dataclass(frozen=True)
class MetricsReport:
    n_events: int
    n_initial: int
    per_agent: tuple[int, ...]
    t_con: float | None
    energy: float | None
    h2sq: float
    h2_tail: float

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop("per_agent")
        return row


def count_events(trace: Trace) -> tuple[np.ndarray, int, int]:
    """Per-agent broadcast counts, the total and the initial-broadcast share."""
    per_agent = np.zeros(trace.n, dtype=int)
    n_initial = 0
    for ev in trace.events:
        for agent, cause in zip(ev.agents, ev.causes):
            per_agent[agent] += 1
            n_initial += cause == INITIAL
    return per_agent, int(per_agent.sum()), n_initial


def _first_drop(a, b, c, level, dur):
    """Smallest ``s`` in ``[0, dur]`` with ``a + b s + c s^2 <= level``, else ``None``."""
    if a <= level:
        return 0.0
    # solve c s^2 + b s + (a - level) = 0 with a - level > 0
    k = a - level
    if c == 0:
        if b >= 0:
            return None
        s = -k / b
        return s if s <= dur else None
    disc = b * b - 4 * c * k
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    # numerically stable pair of roots
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [r for r in (q / c, k / q if q != 0 else math.inf) if 0 <= r <= dur]
    return min(roots) if roots else None


def convergence_time(trace: Trace, lam: float | None = None, fraction: float = 0.01) -> float | None:
    """Earliest time ``V_lam`` falls to ``fraction`` of its initial value.

    ``None`` when the trace ends first. Solved exactly on the segment where
    the drop happens.
    """
    lam = trace.law.lam if lam is None else lam
    a, b, c = segment_quadratics(trace, lam)
    if a[0] <= 0:
        return 0.0
    level = fraction * a[0]
    dur = trace.t_end - trace.t_start
    ends = a + b * dur + c * dur * dur
    for k in range(trace.n_segments):
        if a[k] > level and ends[k] > level and b[k] >= 0:
            continue
        s = _first_drop(a[k], b[k], c[k], level, dur[k])
        if s is not None:
            return float(trace.t_start[k] + s)
    return None


def _exp10_integral(g0, slope, dur):
    """``int_0^dur 10**(g0 + slope*s) ds`` elementwise, stable for tiny slopes."""
    z = slope * dur * LN10
    small = np.abs(z) < 1e-12
    safe = np.where(small, 1.0, z)
    ratio = np.where(small, 1.0 + 0.5 * z, np.expm1(safe) / safe)
    return 10.0 ** g0 * dur * ratio


def energy(trace: Trace, t_con: float | None, drift=None, eta: float = 1.0,
           zeta: float = 1.0, p_tx: float = 1.0) -> float:
    """Radio energy up to ``t_con``: time integral of the all-pairs power model.

    Instantaneous power is ``sum_{i != j} eta * 10**(0.1 p_tx + zeta |a_i - a_j|)``
    where ``a`` is the broadcast quantity: the controlled drift ``x / drift``
    for clock runs, the state itself otherwise.
    """
    if t_con is None:
        raise ValueError("energy needs a convergence time; the run never reached it")
    scale = np.ones(trace.n) if drift is None else 1.0 / np.asarray(drift, dtype=float)
    keep = trace.t_start < t_con
    t0 = trace.t_start[keep]
    dur = np.minimum(trace.t_end[keep], t_con) - t0
    a0 = trace.x_start[keep] * scale
    da = trace.u[keep] * scale
    iu, ju = np.triu_indices(trace.n, k=1)
    p = a0[:, iu] - a0[:, ju]
    q = da[:, iu] - da[:, ju]
    # split each pair's segment where the difference changes sign
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(q != 0, -p / q, -1.0)
    split = (cross > 0) & (cross < dur[:, None])
    d = np.broadcast_to(dur[:, None], p.shape)
    first = np.where(split, cross, d)
    sgn0 = np.sign(np.where(p != 0, p, q))
    total = _exp10_integral(zeta * sgn0 * p, zeta * sgn0 * q, first)
    rest = np.where(split, d - first, 0.0)
    total = total + np.where(split, _exp10_integral(0.0, zeta * np.abs(q), rest), 0.0)
    # ordered pairs: each unordered pair twice
    return float(2.0 * eta * 10.0 ** (0.1 * p_tx) * total.sum())


def h2_norm_sq(trace: Trace, ybar: float | None = None) -> tuple[float, float]:
    """``int sum_i (x_i - ybar)^2 dt`` over the trace, plus a tail estimate.

    ``ybar`` defaults to the run's consensus value. The tail estimate
    extrapolates the last-quarter exponential decay of the integrand past
    the horizon.
    """
    ybar = trace.target if ybar is None else ybar
    p = trace.x_start - ybar
    q = trace.u
    dur = (trace.t_end - trace.t_start)[:, None]
    total = float(np.sum(p * p * dur + p * q * dur ** 2 + q * q * dur ** 3 / 3.0))

    def integrand(t):
        dev = trace.state_at(t) - ybar
        return float(dev @ dev)

    end = trace.t_end[-1]
    g_end, g_mid = integrand(end), integrand(0.75 * end)
    tail = 0.0
    if g_end > 0 and g_mid > g_end:
        rate = math.log(g_mid / g_end) / (0.25 * end)
        tail = g_end / rate
    return total, tail


def compute_metrics(trace: Trace, lam: float | None = None, drift=None) -> MetricsReport:
    per_agent, total, n_init = count_events(trace)
    t_con = convergence_time(trace, lam)
    e = energy(trace, t_con, drift) if t_con is not None else None
    c, tail = h2_norm_sq(trace)
    return MetricsReport(n_events=total, n_initial=n_init, per_agent=tuple(int(v) for v in per_agent),
                         t_con=t_con, energy=e, h2sq=c, h2_tail=tail)
