import numpy as np
import pytest

from mixreg.model import ComponentParams, MixtureSample, flatten
from mixreg.simlab import gen_concentrations


def random_params(rng, d, M, sigma2_lo=0.25):
    """Random well-separated component parameters for testing."""
    params = []
    for m in range(M):
        A = rng.normal(size=(d, d))
        Sigma = A @ A.T + np.eye(d)
        params.append(
            ComponentParams(
                b=rng.normal(size=d),
                sigma2=sigma2_lo + rng.uniform(0.0, 1.0),
                mu=rng.normal(scale=3.0, size=d) + 3.0 * m,
                Sigma=Sigma,
            )
        )
    return params


def draw_sample(rng, n, params, P=None, intercept=False):
    """Simulate a mixture sample from explicit component parameters.

    With intercept=True the first design column is constant 1 and the
    remaining d-1 columns are drawn from the component laws (the shape
    the experiment generator uses).
    """
    M = len(params)
    d = params[0].d
    if P is None:
        P = gen_concentrations(n, M, rng)
    latent = (rng.uniform(size=n)[:, None] > np.cumsum(P, axis=1)).sum(axis=1)
    X = np.empty((n, d))
    Y = np.empty(n)
    for m, p in enumerate(params):
        idx = latent == m
        cnt = int(idx.sum())
        if cnt == 0:
            continue
        L = np.linalg.cholesky(p.Sigma)
        if intercept:
            Xm = np.empty((cnt, d))
            Xm[:, 0] = 1.0
            Xm[:, 1:] = p.mu[1:] + rng.normal(size=(cnt, d - 1)) @ L[1:, 1:].T
        else:
            Xm = p.mu + rng.normal(size=(cnt, d)) @ L.T
        X[idx] = Xm
        Y[idx] = Xm @ p.b + np.sqrt(p.sigma2) * rng.normal(size=cnt)
    return MixtureSample(Y=Y, X=X, P=P, latent=latent)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)


@pytest.fixture
def small_sample(rng):
    params = random_params(rng, d=2, M=2)
    return draw_sample(rng, 400, params), params


def tau_of(params):
    return flatten(params)
