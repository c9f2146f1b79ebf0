"""Lyapunov certificates for event-triggered consensus runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .graph import ConfigurationError, Digraph, laplacian_spectrum
from .triggers import TriggerLaw

MONO_TOL = 1e-9
BOUND_TOL = 1e-9


def v1(x, xbar: float) -> float:
    d = np.asarray(x, dtype=float) - xbar
    return 0.5 * float(d @ d)


def v2(g: Digraph, x) -> float:
    x = np.asarray(x, dtype=float)
    return 0.5 * float(x @ (g.laplacian @ x))


def lyapunov_value(lam: float, g: Digraph, x, xbar: float) -> float:
    """``lam * V1 + (1 - lam) * V2``; zero exactly at consensus."""
    return lam * v1(x, xbar) + (1.0 - lam) * v2(g, x)


def v2dot_bound_check(g: Digraph, law: TriggerLaw, x, xhat) -> tuple[float, float, bool]:
    """Compare ``x^T L^T xdot`` against the per-agent Young's-inequality bound.

    ``rhs = -sum_i [delta_i u_i^2 - (d_i/(2 b_i) + d_i/(2 c_i)) e_i^2]`` with
    unit rates. Returns ``(lhs, rhs, lhs <= rhs + 1e-9)``.
    """
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    lap = g.laplacian
    u = -(lap @ xhat)
    e = xhat - x
    d = g.out_degree
    lhs = float((lap @ x) @ u)
    rhs = -float(np.sum(law.delta * u * u - (d / (2 * law.b) + d / (2 * law.c)) * e * e))
    return lhs, rhs, lhs <= rhs + BOUND_TOL


def v2_rate(g: Digraph, x, xdot) -> float:
    """True time derivative of ``V2`` along ``xdot``: ``x^T (L + L^T)/2 xdot``."""
    x = np.asarray(x, dtype=float)
    lap = g.laplacian
    return 0.5 * float(x @ ((lap + lap.T) @ xdot))


def exp_rate(g: Digraph, law: TriggerLaw) -> float:
    """Exponential decay constant ``A`` guaranteed for ``V2`` under the pure V2 law."""
    if law.kind != "alg2":
        raise ConfigurationError("the exponential rate constant is only defined for the V2-based law (lambda = 0)")
    sp = laplacian_spectrum(g)
    s_max = law.sigma.max()
    d_max = law.delta.max()
    bc_min = law.b.min() + law.c.min()
    d_min = g.out_degree.min()
    num = (s_max - 1.0) * bc_min * d_max * sp.lambda2 * d_min
    den = bc_min * d_min + 2.0 * sp.l_norm * s_max * d_max * law.b.max() * law.c.max() * sp.lambdaN
    return float(num / den)


def segment_quadratics(trace: Trace, lam: float, xbar: float | None = None):
    """Coefficients ``(a, b, c)`` with ``V(t_start + s) = a + b s + c s^2`` per segment."""
    xbar = trace.target if xbar is None else xbar
    lap = trace.graph.laplacian
    x0, u = trace.x_start, trace.u
    y0 = x0 - xbar
    a = lam * 0.5 * np.einsum("ki,ki->k", y0, y0) + (1 - lam) * 0.5 * np.einsum("ki,ij,kj->k", x0, lap, x0)
    sym = 0.5 * (lap + lap.T)
    b = lam * np.einsum("ki,ki->k", y0, u) + (1 - lam) * np.einsum("ki,ij,kj->k", x0, sym, u)
    c = lam * 0.5 * np.einsum("ki,ki->k", u, u) + (1 - lam) * 0.5 * np.einsum("ki,ij,kj->k", u, lap, u)
    return a, b, c


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    max_increase: float
    max_slope: float
    worst_time: float
    n_samples: int

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: max increase {self.max_increase:.3e}, max slope {self.max_slope:.3e} "
                f"at t={self.worst_time:.6g} over {self.n_samples} samples")


def monotonicity_report(trace: Trace, lam: float | None = None, interior: int = 10,
                        tol: float = MONO_TOL) -> MonotonicityReport:
    """Check that ``V_lam`` never increases along ``trace``.

    Samples every segment at its endpoints and ``interior`` evenly spaced
    inner points and also reports the largest exact slope (at segment ends,
    since the slope is linear within a segment).
    """
    lam = trace.law.lam if lam is None else lam
    a, b, c = segment_quadratics(trace, lam)
    dur = trace.t_end - trace.t_start
    frac = np.linspace(0.0, 1.0, interior + 2)
    s = dur[:, None] * frac[None, :]
    vals = a[:, None] + b[:, None] * s + c[:, None] * s * s
    times = trace.t_start[:, None] + s
    flat_v, flat_t = vals.ravel(), times.ravel()
    inc = np.diff(flat_v)
    k = int(np.argmax(inc)) if inc.size else 0
    max_inc = float(max(inc.max(initial=0.0), 0.0))
    slopes = np.concatenate([b, b + 2 * c * dur])
    return MonotonicityReport(passed=max_inc <= tol, max_increase=max_inc,
                              max_slope=float(slopes.max()), worst_time=float(flat_t[k + 1] if inc.size else 0.0),
                              n_samples=flat_v.size)


def lyapunov_series(trace: Trace, lam: float | None = None):
    """``(t, V1, V2, V_lam)`` at every segment boundary."""
    lam = trace.law.lam if lam is None else lam
    t = np.append(trace.t_start, trace.t_end[-1])
    xs = np.vstack([trace.x_start, trace.x_end[-1:]])
    xbar = trace.target
    val1 = np.array([v1(x, xbar) for x in xs])
    val2 = np.array([v2(trace.graph, x) for x in xs])
    return t, val1, val2, lam * val1 + (1 - lam) * val2


def fitted_log_slope(t, v) -> float:
    """Least-squares slope of ``log V`` over samples with ``V > 0``."""
    t, v = np.asarray(t), np.asarray(v)
    keep = v > 0
    return float(np.polyfit(t[keep], np.log(v[keep]), 1)[0])
