"""Weighted digraphs, standing-assumption checks and Laplacian spectra."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import connected_components

ROW_SUM_TOL = 1e-12


class ConfigurationError(ValueError):
    """Raised when a graph or trigger configuration violates a precondition."""


@dataclass(frozen=True, eq=False)
class Digraph:
    """Weighted digraph with w_ij > 0 meaning agent i listens to agent j.

    Use :func:`build_digraph` rather than calling the constructor directly.
    """

    weights: np.ndarray
    out_degree: np.ndarray
    in_degree: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def out_neighbors(self, i: int) -> np.ndarray:
        """Out-neighbors of ``i``, self-loops excluded."""
        row = self.weights[i].copy()
        row[i] = 0.0
        return np.flatnonzero(row > 0)

    @property
    def offdiag(self) -> np.ndarray:
        w = self.weights.copy()
        np.fill_diagonal(w, 0.0)
        return w


def build_digraph(weights) -> Digraph:
    w = np.array(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ConfigurationError(f"adjacency matrix must be square, got shape {w.shape}")
    if w.shape[0] < 2:
        raise ConfigurationError("need at least two agents")
    if not np.all(np.isfinite(w)):
        raise ConfigurationError("adjacency matrix has non-finite entries")
    if np.any(w < 0):
        i, j = np.argwhere(w < 0)[0]
        raise ConfigurationError(f"negative weight w[{i},{j}] = {w[i, j]}")

    d_out = w.sum(axis=1)
    d_in = w.sum(axis=0)
    lap = np.diag(d_out) - w
    # the self-loop weight enters D_out and W alike, so the diagonal is d_i - w_ii
    np.fill_diagonal(lap, d_out - np.diag(w))
    row_err = np.max(np.abs(lap.sum(axis=1)))
    if row_err > ROW_SUM_TOL * max(1.0, float(d_out.max())):
        raise ConfigurationError(f"Laplacian row sums deviate from zero by {row_err:g}")
    for arr in (w, d_out, d_in, lap):
        arr.setflags(write=False)
    return Digraph(weights=w, out_degree=d_out, in_degree=d_in, laplacian=lap)


def is_weight_balanced(g: Digraph, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(g.out_degree - g.in_degree)) <= tol)


def is_strongly_connected(g: Digraph) -> bool:
    adj = g.offdiag > 0
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True)
class Spectrum:
    """Extreme eigenvalues of the symmetrized Laplacian plus ||L||_2."""

    lambda2: float
    lambdaN: float
    l_norm: float


def laplacian_spectrum(g: Digraph) -> Spectrum:
    """Spectral constants of ``(L + L^T)/2`` used by the quadratic-form bounds.

    For a weight-balanced digraph ``x^T L^T x`` equals ``x^T L_s x`` with
    ``L_s`` the symmetric part, so its eigenvalues are the ones that sandwich
    the quadratic forms. Raises :class:`ConfigurationError` if the graph is not
    weight-balanced and strongly connected.
    """
    require_standing_assumptions(g)
    lap = g.laplacian
    sym = 0.5 * (lap + lap.T)
    eig = np.linalg.eigvalsh(sym)
    eig[np.abs(eig) < 1e-10] = 0.0
    l_norm = float(np.linalg.svd(lap, compute_uv=False)[0])
    return Spectrum(lambda2=float(eig[1]), lambdaN=float(eig[-1]), l_norm=l_norm)


def require_standing_assumptions(g: Digraph, tol: float = 1e-12) -> None:
    if not is_weight_balanced(g, tol):
        gap = np.max(np.abs(g.out_degree - g.in_degree))
        raise ConfigurationError(f"digraph is not weight-balanced (max |d_out - d_in| = {gap:g})")
    if not is_strongly_connected(g):
        raise ConfigurationError("digraph is not strongly connected")


def _frac_matrix(rows):
    return [[float(Fraction(v)) for v in row.split()] for row in rows]


# The four five-agent benchmark networks: random, ring, complete, star.
NETWORKS = {
    "net1": _frac_matrix([
        "0 1 0 0 0",
        "0 0 1/2 1/2 0",
        "5/6 0 1/6 0 0",
        "1/6 0 1/6 1/2 1/6",
        "0 0 1/6 0 5/6",
    ]),
    "net2": _frac_matrix([
        "0 1/2 0 0 1/2",
        "1/2 0 1/2 0 0",
        "0 1/2 0 1/2 0",
        "0 0 1/2 0 1/2",
        "1/2 0 0 1/2 0",
    ]),
    "net3": _frac_matrix([
        "0 1/4 1/4 1/4 1/4",
        "1/4 0 1/4 1/4 1/4",
        "1/4 1/4 0 1/4 1/4",
        "1/4 1/4 1/4 0 1/4",
        "1/4 1/4 1/4 1/4 0",
    ]),
    "net4": _frac_matrix([
        "0 1/4 1/4 1/4 1/4",
        "1/4 0 0 0 0",
        "1/4 0 0 0 0",
        "1/4 0 0 0 0",
        "1/4 0 0 0 0",
    ]),
}


def network(name: str) -> Digraph:
    try:
        return build_digraph(NETWORKS[name])
    except KeyError:
        raise ConfigurationError(f"unknown network {name!r}; choose from {sorted(NETWORKS)}") from None
