import numpy as np
import pytest

from etconsensus.graph import network
from etconsensus.triggers import safe_bc, validate_and_derive

NETS = ("net1", "net2", "net3", "net4")
LAMBDAS = (0.0, 0.5, 1.0)


def make_law(name, lam, sigma=0.5, **kw):
    """Law on a builtin network; the star gets the safe b, c (inverse degree makes its hub delta negative)."""
    g = network(name)
    if name == "net4" and "b" not in kw:
        kw["b"] = kw["c"] = safe_bc(g)
    return g, validate_and_derive(g, lam, sigma, **kw)


def random_x0(seed, n=5):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)


@pytest.fixture
def w3():
    return network("net3")
