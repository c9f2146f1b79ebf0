"""Triggering laws, parameter validation and dwell-time bounds.

Three laws share one threshold shape ``theta_i = sigma_i * phi_i``:

* ``alg1``: error tolerance built from the sum of squared neighbor gaps,
  derived from the disagreement certificate ``V1``.
* ``alg2``: tolerance built from the squared control input, derived from
  the Laplacian certificate ``V2``.
* ``combined``: the ``lam``-weighted blend of the two, with ``lam = 1``
  recovering ``alg1`` and ``lam = 0`` recovering ``alg2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ConfigurationError, Digraph, require_standing_assumptions

EVENT_TOL = 1e-12
DEFAULT_EPS_FRACTION = 0.99
KINDS = ("alg1", "alg2", "combined")


@dataclass(frozen=True, eq=False)
class TriggerLaw:
    kind: str
    lam: float
    sigma: np.ndarray
    b: np.ndarray
    c: np.ndarray
    delta: np.ndarray
    eps: np.ndarray

    @property
    def uses_v2(self) -> bool:
        return self.kind == "alg2" or (self.kind == "combined" and self.lam < 1.0)

    def describe(self) -> str:
        return f"{self.kind}(lambda={self.lam:g}, sigma={np.unique(self.sigma).tolist()})"


def kind_for_lambda(lam: float) -> str:
    if lam == 1.0:
        return "alg1"
    if lam == 0.0:
        return "alg2"
    return "combined"


def degree_bc(g: Digraph) -> np.ndarray:
    """``b_i = c_i = 0.5 / d_i^out``, the benchmark choice."""
    return 0.5 / g.out_degree


def safe_bc(g: Digraph) -> np.ndarray:
    """``b_i = c_i = 0.5 / max_j d_j^out``; guarantees ``delta_i >= 0.5``."""
    return np.full(g.n, 0.5 / g.out_degree.max())


def compute_delta(g: Digraph, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return 1.0 - g.out_degree * b / 2.0 - g.weights @ c / 2.0


def _per_agent(value, n: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigurationError(f"{name} must be a scalar or a length-{n} array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} has non-finite entries")
    return arr


def validate_and_derive(g: Digraph, lam: float, sigma, b=None, c=None, eps=None,
                        kind: str | None = None) -> TriggerLaw:
    """Validate trigger parameters against ``g`` and derive ``delta`` and ``eps``.

    ``b`` and ``c`` default to :func:`degree_bc`. ``eps`` defaults to 0.99 of
    the dwell bound; explicit values must lie strictly inside ``(0, bound)``.
    ``kind`` defaults to the law implied by ``lam``.
    """
    require_standing_assumptions(g)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ConfigurationError(f"lambda must lie in [0, 1], got {lam}")
    kind = kind or kind_for_lambda(lam)
    if kind not in KINDS:
        raise ConfigurationError(f"unknown trigger kind {kind!r}")
    if kind == "alg1" and lam != 1.0 or kind == "alg2" and lam != 0.0:
        raise ConfigurationError(f"kind {kind!r} is inconsistent with lambda={lam}")

    n = g.n
    sigma = _per_agent(sigma, n, "sigma")
    if np.any((sigma <= 0) | (sigma >= 1)):
        raise ConfigurationError(f"sigma must lie strictly inside (0, 1), got {sigma.tolist()}")
    b = degree_bc(g) if b is None else _per_agent(b, n, "b")
    c = degree_bc(g) if c is None else _per_agent(c, n, "c")
    if np.any(b <= 0) or np.any(c <= 0):
        raise ConfigurationError("b and c must be positive")
    delta = compute_delta(g, b, c)

    law = TriggerLaw(kind=kind, lam=lam, sigma=sigma, b=b, c=c, delta=delta, eps=np.zeros(n))
    if law.uses_v2 and np.any(delta <= 0):
        i = int(np.argmin(delta))
        safe = 0.5 / g.out_degree.max()
        raise ConfigurationError(
            f"delta_{i + 1} = {delta[i]:.6g} <= 0 for agent {i + 1}; "
            f"try the safe default b_i = c_i = 0.5/max_j d_j^out = {safe:.6g}"
        )

    bound = np.array([dwell_bounds(law, g, i)[1] for i in range(n)])
    if eps is None:
        eps = DEFAULT_EPS_FRACTION * bound
    else:
        eps = _per_agent(eps, n, "eps")
        bad = np.flatnonzero((eps <= 0) | (eps >= bound))
        if bad.size:
            i = int(bad[0])
            raise ConfigurationError(
                f"eps_{i + 1} = {eps[i]:.6g} must lie in (0, {bound[i]:.6g})"
            )
    for arr in (sigma, b, c, delta, eps):
        arr.setflags(write=False)
    return TriggerLaw(kind=kind, lam=lam, sigma=sigma, b=b, c=c, delta=delta, eps=eps)


def _alg2_gain(law: TriggerLaw, g: Digraph) -> np.ndarray:
    b, c = law.b, law.c
    return 2.0 * law.delta * b * c / ((b + c) * g.out_degree)


def neighbor_gaps(g: Digraph, xhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent ``sum_j w_ij (xh_i - xh_j)^2`` and ``sum_j w_ij (xh_i - xh_j)``."""
    diff = xhat[:, None] - xhat[None, :]
    w = g.weights
    return (w * diff * diff).sum(axis=1), (w * diff).sum(axis=1)


def phi(law: TriggerLaw, g: Digraph, xhat: np.ndarray) -> np.ndarray:
    sq, lin = neighbor_gaps(g, xhat)
    if law.kind == "alg1":
        return sq
    if law.kind == "alg2":
        return lin * lin
    d = g.out_degree
    return law.lam * sq / (4.0 * d) + (1.0 - law.lam) * _alg2_gain(law, g) * (lin * lin)


def thresholds(law: TriggerLaw, g: Digraph, xhat: np.ndarray) -> np.ndarray:
    """Error tolerance ``theta_i`` for every agent; agent i fires once ``e_i^2`` exceeds it."""
    xhat = np.asarray(xhat, dtype=float)
    sq, lin = neighbor_gaps(g, xhat)
    d = g.out_degree
    # same operation order in all three branches so lam in {0, 1} reproduces alg2/alg1 bit for bit
    if law.kind == "alg1":
        return law.sigma * (sq / (4.0 * d))
    if law.kind == "alg2":
        return law.sigma * (_alg2_gain(law, g) * (lin * lin))
    return law.sigma * (law.lam * sq / (4.0 * d) + (1.0 - law.lam) * _alg2_gain(law, g) * (lin * lin))


def trigger_threshold(law: TriggerLaw, g: Digraph, i: int, xhat) -> float:
    return float(thresholds(law, g, xhat)[i])


def fired_mask(e2: np.ndarray, theta: np.ndarray, phi_: np.ndarray) -> np.ndarray:
    # equality branch uses a tolerance relative to theta so it stays scale-free
    return (e2 > theta) | ((phi_ > 0) & (e2 >= theta - EVENT_TOL * theta))


def trigger_fired(law: TriggerLaw, g: Digraph, i: int, x_i: float, xhat) -> bool:
    xhat = np.asarray(xhat, dtype=float)
    e = xhat[i] - x_i
    theta = thresholds(law, g, xhat)[i : i + 1]
    ph = phi(law, g, xhat)[i : i + 1]
    return bool(fired_mask(np.array([e * e]), theta, ph)[0])


def dwell_bounds(law: TriggerLaw, g: Digraph, i: int) -> tuple[float, float]:
    """Guaranteed self-trigger dwell ``tau_i`` and the strict upper bound on ``eps_i``.

    Both are the same number: the time an agent that has just broadcast needs
    before its own error can reach the threshold, assuming no neighbor speaks.
    Self-loops are left out of ``w_i^max`` and ``|N_i^out|`` because they never
    contribute to a neighbor gap.
    """
    d = g.out_degree[i]
    nbrs = g.out_neighbors(i)
    w_max = g.weights[i, nbrs].max()
    alg1 = law.sigma[i] / (4.0 * d * w_max * nbrs.size)
    if law.kind == "alg1":
        radicand = alg1
    else:
        if law.uses_v2 and law.delta[i] <= 0:
            raise ConfigurationError(f"delta_{i + 1} = {law.delta[i]:.6g} <= 0, dwell time undefined")
        alg2 = law.sigma[i] * 2.0 * law.delta[i] * law.b[i] * law.c[i] / ((law.b[i] + law.c[i]) * d)
        radicand = alg2 if law.kind == "alg2" else law.lam * alg1 + (1.0 - law.lam) * alg2
    tau = float(np.sqrt(radicand))
    return tau, tau
