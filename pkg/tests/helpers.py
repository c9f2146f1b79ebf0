"""Trace inspection shared by the property and acceptance tests."""

import numpy as np

from etconsensus.engine import THRESHOLD


def threshold_gaps(trace):
    """``(agent, gap, heard)`` for consecutive threshold broadcasts of each agent.

    ``heard`` says whether an out-neighbor broadcast in ``(t_prev, t_next]``.
    """
    g = trace.graph
    out = []
    for i in range(g.n):
        nbrs = set(g.out_neighbors(i).tolist())
        prev = None
        for ev in trace.events:
            if i in ev.agents:
                if ev.cause_of(i) == THRESHOLD and prev is not None and prev[1] == THRESHOLD:
                    heard = any(e.t > prev[0] and e.t <= ev.t and nbrs & set(e.agents) for e in trace.events)
                    out.append((i, ev.t - prev[0], heard))
                prev = (ev.t, ev.cause_of(i))
    return out


def max_mean_drift(trace):
    """Largest ``|mean(x(t)) - mean(x0)|`` over all segment endpoints."""
    m0 = trace.x0.mean()
    return max(np.abs(trace.x_start.mean(axis=1) - m0).max(), np.abs(trace.x_end.mean(axis=1) - m0).max())
