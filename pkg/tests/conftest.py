import numpy as np
import pytest

from proxflow import prox
from proxflow.solvers import Problem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_spd(n, rng, scale=1.0):
    """Random symmetric positive definite matrix with eigenvalues in (0, scale]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = scale * (0.2 + 0.8 * rng.random(n))
    return (q * eigs) @ q.T


def quadratic_triple(seed=7, n=3, scale=0.4):
    """Strongly convex smooth triple (f, g, w) with modest total curvature."""
    rng = np.random.default_rng(seed)
    f = prox.Quadratic(make_spd(n, rng, scale), 0.5 * rng.standard_normal(n))
    g = prox.Quadratic(make_spd(n, rng, scale), 0.5 * rng.standard_normal(n))
    w = prox.Quadratic(make_spd(n, rng, scale), 0.5 * rng.standard_normal(n))
    return f, g, w


def quadratic_problem(seed=7, n=3, scale=0.4):
    f, g, w = quadratic_triple(seed, n, scale)
    return Problem(f=f, g=g, w=w)


def centered_quadratic_problem(seed=11, n=3, scale=0.4):
    """All three terms minimized at the origin (q = 0), so the total
    minimizer is a common stationary point of every term."""
    rng = np.random.default_rng(seed)
    f = prox.Quadratic(make_spd(n, rng, scale))
    g = prox.Quadratic(make_spd(n, rng, scale))
    w = prox.Quadratic(make_spd(n, rng, scale))
    return Problem(f=f, g=g, w=w)
