"""Exact event-driven simulation of event-triggered consensus.

Between broadcasts every true state moves on a straight line, so each
agent's trigger function is a quadratic in time and the next event is a
closed-form root. No numerical integration is involved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import Digraph, require_standing_assumptions
from .triggers import TriggerLaw, fired_mask, neighbor_gaps, phi, thresholds

log = logging.getLogger(__name__)

TIE_TOL = 1e-12
DEFAULT_EVENT_CAP = 1_000_000

INITIAL = "initial"
THRESHOLD = "threshold"
FORCED = "forced"


class SafetyCapExceeded(RuntimeError):
    """The run produced more broadcasts than the configured cap."""


@dataclass
class SimState:
    t: float
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    last_broadcast: np.ndarray
    rate: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.xhat - self.x


@dataclass(frozen=True)
class EventRecord:
    t: float
    agents: tuple[int, ...]
    causes: tuple[str, ...]

    def cause_of(self, agent: int) -> str:
        return self.causes[self.agents.index(agent)]


@dataclass
class Trace:
    """Piecewise-linear trajectory plus the broadcast log of one run.

    Segment ``k`` covers ``[t_start[k], t_end[k]]`` with
    ``x(t) = x_start[k] + u[k] * (t - t_start[k])`` and frozen broadcast
    states ``xhat[k]``.
    """

    graph: Digraph
    law: TriggerLaw
    rate: np.ndarray
    window: np.ndarray
    x0: np.ndarray
    horizon: float
    events: list[EventRecord]
    t_start: np.ndarray
    t_end: np.ndarray
    x_start: np.ndarray
    u: np.ndarray
    xhat: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_segments(self) -> int:
        return self.t_start.size

    @property
    def x_end(self) -> np.ndarray:
        return self.x_start + self.u * (self.t_end - self.t_start)[:, None]

    @property
    def x_final(self) -> np.ndarray:
        return self.x_end[-1]

    @property
    def target(self) -> float:
        """Consensus value the run converges to, see :func:`consensus_value`."""
        return consensus_value(self.x0, self.rate)

    def state_at(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.t_start, t, side="right")) - 1
        k = min(max(k, 0), self.n_segments - 1)
        return self.x_start[k] + self.u[k] * (t - self.t_start[k])

    def broadcast_times(self, agent: int) -> list[tuple[float, str]]:
        return [(ev.t, ev.cause_of(agent)) for ev in self.events if agent in ev.agents]


def control_input(g: Digraph, xhat: np.ndarray, rate: np.ndarray | None = None) -> np.ndarray:
    """``u_i = -rate_i * sum_j w_ij (xh_i - xh_j)``; self-loops cancel."""
    # shares its arithmetic with the trigger thresholds so tiny gaps stay consistent
    _, lin = neighbor_gaps(g, np.asarray(xhat, dtype=float))
    return -lin if rate is None else -(rate * lin)


def _first_crossings(e0, slope, theta):
    """Earliest ``s > 0`` with ``(e0 + slope*s)^2 = theta``; ``inf`` if never."""
    s = np.full(e0.shape, np.inf)
    # theta == 0 means every neighbor gap vanished, so u is zero in exact arithmetic
    moving = (slope != 0) & (theta > 0)
    r = np.sqrt(theta[moving])
    e, k = e0[moving], slope[moving]
    # |e| <= r here, so of the two roots (+-r - e)/k exactly one is >= 0
    s[moving] = np.maximum((r - e) / k, (-r - e) / k)
    return s


def next_event_time(state: SimState, law: TriggerLaw, g: Digraph) -> tuple[float, list[int]] | None:
    """Next threshold crossing of any agent, or ``None`` if none ever occurs.

    Assumes no agent's trigger currently fires, which holds right after
    :func:`apply_broadcast_cascade`.
    """
    theta = thresholds(law, g, state.xhat)
    # e = xhat - x evolves with slope -u while xhat is frozen
    s = _first_crossings(state.error, -state.u, theta)
    if not np.isfinite(s).any():
        return None
    s_min = s.min()
    initiators = np.flatnonzero(s <= s_min + TIE_TOL).tolist()
    return float(state.t + s_min), initiators


def apply_broadcast_cascade(state: SimState, initiators, law: TriggerLaw, g: Digraph,
                            window: np.ndarray | None = None,
                            cause: str = THRESHOLD) -> EventRecord:
    """Resolve every broadcast happening at ``state.t`` and update ``state`` in place.

    Starting from ``initiators``, an agent joins when it hears a broadcasting
    out-neighbor while its own last broadcast lies strictly inside the open
    window ``(t - window_i, t)``, or when the refreshed broadcast states push
    its own trigger over the threshold. Iterates to a fixed point; the set
    only grows so this takes at most ``n`` rounds.
    """
    t = state.t
    window = law.eps if window is None else window
    causes = {int(i): cause for i in initiators}
    listens = g.offdiag > 0
    recent = (state.last_broadcast < t) & (t - state.last_broadcast < window)
    xhat = state.xhat.copy()
    for _ in range(g.n + 1):
        members = np.zeros(g.n, dtype=bool)
        members[list(causes)] = True
        xhat[members] = state.x[members]
        hears = listens[:, members].any(axis=1)
        forced = np.flatnonzero(hears & recent & ~members)
        e = xhat - state.x
        fired = fired_mask(e * e, thresholds(law, g, xhat), phi(law, g, xhat))
        fired = np.flatnonzero(fired & ~members)
        if forced.size == 0 and fired.size == 0:
            break
        for i in forced:
            causes[int(i)] = FORCED
        for i in fired:
            causes.setdefault(int(i), THRESHOLD)
    else:  # pragma: no cover - the set grows every round
        raise RuntimeError("broadcast cascade failed to settle")

    agents = tuple(sorted(causes))
    idx = list(agents)
    state.xhat = xhat
    state.last_broadcast[idx] = t
    state.u = control_input(g, state.xhat, state.rate)
    return EventRecord(t=t, agents=agents, causes=tuple(causes[i] for i in agents))


def consensus_value(x0, rate=None) -> float:
    """Limit of every state: the ``1/rate`` weighted mean of ``x0``.

    ``sum_i x_i / rate_i`` is invariant whenever ``1^T L = 0``, so this is
    the plain average for unit rates.
    """
    x0 = np.asarray(x0, dtype=float)
    if rate is None:
        return float(x0.mean())
    inv = 1.0 / np.asarray(rate, dtype=float)
    return float(inv @ x0 / inv.sum())


def initial_state(g: Digraph, x0, rate=None, offset: float = 0.0) -> SimState:
    """Everyone has just broadcast; states are stored relative to ``offset``."""
    x0 = np.array(x0, dtype=float)
    if x0.shape != (g.n,):
        raise ValueError(f"x0 must have length {g.n}, got shape {x0.shape}")
    rate = np.ones(g.n) if rate is None else np.array(rate, dtype=float)
    if np.any(rate <= 0):
        raise ValueError("rates must be positive")
    x = x0 - offset
    return SimState(t=0.0, x=x, xhat=x.copy(), u=control_input(g, x, rate),
                    last_broadcast=np.zeros(g.n), rate=rate)


class _Recorder:
    def __init__(self, offset: float):
        self.offset = offset
        self.t_start, self.t_end, self.x_start, self.u, self.xhat = [], [], [], [], []

    def add(self, t0, t1, state: SimState):
        if t1 > t0:
            self.t_start.append(t0)
            self.t_end.append(t1)
            self.x_start.append(state.x + self.offset)
            self.u.append(state.u.copy())
            self.xhat.append(state.xhat + self.offset)

    def build(self, g, law, state, window, x0, horizon, events) -> Trace:
        return Trace(graph=g, law=law, rate=state.rate, window=window, x0=x0, horizon=horizon,
                     events=events, t_start=np.array(self.t_start), t_end=np.array(self.t_end),
                     x_start=np.array(self.x_start), u=np.array(self.u), xhat=np.array(self.xhat))


def run_event_driven(g: Digraph, law: TriggerLaw, x0, horizon: float, rate=None,
                     window=None, event_cap: int = DEFAULT_EVENT_CAP) -> Trace:
    """Simulate from ``t = 0`` (every agent broadcasts) up to ``horizon``.

    ``rate`` scales each agent's control input and ``window`` overrides the
    forced-rebroadcast windows in absolute time (both used by the clock
    mapping). Raises :class:`SafetyCapExceeded` past ``event_cap`` broadcasts.
    """
    require_standing_assumptions(g)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    x0 = np.array(x0, dtype=float)
    # work relative to the conserved limit so gaps near consensus keep their digits
    offset = consensus_value(x0, rate)
    state = initial_state(g, x0, rate, offset)
    window = law.eps if window is None else np.asarray(window, dtype=float)
    rec = _Recorder(offset)
    events = [EventRecord(0.0, tuple(range(g.n)), (INITIAL,) * g.n)]
    n_broadcasts = g.n

    while True:
        nxt = next_event_time(state, law, g)
        t_next = horizon if nxt is None or nxt[0] >= horizon else nxt[0]
        rec.add(state.t, t_next, state)
        state.x = state.x + state.u * (t_next - state.t)
        state.t = t_next
        if t_next >= horizon:
            break
        ev = apply_broadcast_cascade(state, nxt[1], law, g, window)
        events.append(ev)
        n_broadcasts += len(ev.agents)
        if n_broadcasts > event_cap:
            raise SafetyCapExceeded(
                f"{n_broadcasts} broadcasts by t={state.t:.6g} exceed the cap of {event_cap}"
            )

    trace = rec.build(g, law, state, window, x0, horizon, events)
    log.debug("run finished: %d events, %d segments", len(events), trace.n_segments)
    return trace


def run_fixed_step_oracle(g: Digraph, law: TriggerLaw, x0, horizon: float, dt: float,
                          rate=None, window=None, chunk: int = 4096) -> Trace:
    """Grid-based reference run: triggers are only checked at multiples of ``dt``.

    States are linear between broadcasts, so stepping is exact; only event
    localization is approximate (late by less than ``dt``). Kept free of the
    root solving in :func:`next_event_time` so the two can check each other.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x0 = np.array(x0, dtype=float)
    state = initial_state(g, x0, rate)
    window = law.eps if window is None else np.asarray(window, dtype=float)
    listens = g.offdiag > 0
    rec = _Recorder(0.0)
    events = [EventRecord(0.0, tuple(range(g.n)), (INITIAL,) * g.n)]
    n_steps = int(round(horizon / dt))
    k = 0
    while k < n_steps:
        theta = thresholds(law, g, state.xhat)
        ph = phi(law, g, state.xhat)
        hit = None
        while hit is None and k < n_steps:
            ks = np.arange(k + 1, min(k + chunk, n_steps) + 1)
            xs = state.x[None, :] + state.u[None, :] * (ks * dt - state.t)[:, None]
            e = state.xhat[None, :] - xs
            fire = fired_mask(e * e, theta[None, :], ph[None, :]).any(axis=1)
            if fire.any():
                hit = int(ks[np.argmax(fire)])
            else:
                k = int(ks[-1])
        k_new = hit if hit is not None else n_steps
        t_new = k_new * dt
        rec.add(state.t, t_new, state)
        state.x = state.x + state.u * (t_new - state.t)
        state.t = t_new
        k = k_new
        if hit is None:
            break
        # independent restatement of the broadcast rules at a single instant
        e = state.xhat - state.x
        members = set(np.flatnonzero(fired_mask(e * e, theta, ph)).tolist())
        causes = {i: THRESHOLD for i in members}
        changed = True
        while changed:
            changed = False
            xhat = state.xhat.copy()
            idx = sorted(members)
            xhat[idx] = state.x[idx]
            th, p = thresholds(law, g, xhat), phi(law, g, xhat)
            for i in range(g.n):
                if i in members:
                    continue
                last = state.last_broadcast[i]
                hears = any(listens[i, j] for j in members)
                if hears and last < state.t < last + window[i]:
                    members.add(i)
                    causes[i] = FORCED
                    changed = True
                elif fired_mask(np.array([(xhat[i] - state.x[i]) ** 2]), th[i:i + 1], p[i:i + 1])[0]:
                    members.add(i)
                    causes[i] = THRESHOLD
                    changed = True
        idx = sorted(members)
        state.xhat[idx] = state.x[idx]
        state.last_broadcast[idx] = state.t
        state.u = control_input(g, state.xhat, state.rate)
        events.append(EventRecord(state.t, tuple(idx), tuple(causes[i] for i in idx)))
    return rec.build(g, law, state, window, x0, horizon, events)
