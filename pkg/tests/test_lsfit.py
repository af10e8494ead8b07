import numpy as np
import pytest

from mixreg.errors import SingularDesign
from mixreg.lsfit import (
    asymptotic_covariance,
    ls_estimate,
    ls_fit,
    ls_fit_all,
    moment_estimates,
)
from mixreg.mixweights import minimax_weights
from mixreg.model import MixtureSample

from conftest import draw_sample, random_params


def _ols_sample(rng, n=300, d=2):
    X = rng.normal(size=(n, d))
    b = rng.normal(size=d)
    Y = X @ b + rng.normal(size=n)
    return MixtureSample(Y=Y, X=X, P=np.ones((n, 1))), b


def test_single_component_is_ols(rng):
    s, _ = _ols_sample(rng)
    expected = np.linalg.lstsq(s.X, s.Y, rcond=None)[0]
    np.testing.assert_allclose(ls_estimate(s, 0), expected, atol=1e-10)


def test_single_component_covariance_closed_form(rng):
    # Vhat must reduce to sigma2hat * (X'X/n)^{-1} exactly when M = 1
    s, _ = _ols_sample(rng)
    fit = ls_fit(s, 0)
    resid = s.Y - s.X @ fit.bhat
    s2 = resid @ resid / s.dims.n
    expected = s2 * np.linalg.inv(s.X.T @ s.X / s.dims.n)
    np.testing.assert_allclose(fit.Vhat, expected, atol=1e-10)
    assert not fit.repaired


def test_consistency_two_components(rng):
    params = random_params(rng, d=2, M=2)
    s = draw_sample(rng, 40000, params)
    for k, p in enumerate(params):
        np.testing.assert_allclose(ls_estimate(s, k), p.b, atol=0.25)


def test_moment_oracles_one_hot(rng):
    # with one-hot concentrations the weights reduce to group indicators
    # scaled by inverse group frequency, so every weighted moment equals
    # the plain within-group moment; verify against direct group averages
    n = 600
    params = random_params(rng, d=2, M=2)
    latent = rng.integers(0, 2, size=n)
    P = np.zeros((n, 2))
    P[np.arange(n), latent] = 1.0
    s = draw_sample(rng, n, params, P=P)
    weights = [minimax_weights(s.P, m) for m in range(2)]
    bhats = [ls_estimate(s, m, weights[m]) for m in range(2)]
    mom = moment_estimates(s, weights, bhats)
    for m in range(2):
        idx = s.latent == m
        Xm = s.X[idx]
        np.testing.assert_allclose(mom.Dhat[m], Xm.T @ Xm / idx.sum(), rtol=1e-10)
        resid = s.Y[idx] - Xm @ bhats[m]
        np.testing.assert_allclose(mom.sigma2hat[m], resid @ resid / idx.sum(), rtol=1e-10)


def test_fourth_moment_loop_oracle(rng):
    params = random_params(rng, d=2, M=2)
    s = draw_sample(rng, 80, params)
    weights = [minimax_weights(s.P, m) for m in range(2)]
    bhats = [ls_estimate(s, m, weights[m]) for m in range(2)]
    mom = moment_estimates(s, weights, bhats)
    n, d = s.dims.n, s.dims.d
    a = weights[0].a
    L = np.zeros((d, d, d, d))
    for j in range(n):
        x = s.X[j]
        L += a[j] * np.einsum("i,l,q,r->ilqr", x, x, x, x)
    np.testing.assert_allclose(mom.Lhat[0], L / n, rtol=1e-10)


def test_sigma_assembly_loop_oracle(rng):
    # re-derive the middle matrix of the sandwich with explicit loops
    params = random_params(rng, d=2, M=3)
    s = draw_sample(rng, 500, params)
    fits = ls_fit_all(s)
    mom = fits[0].moments
    bhats = [f.bhat for f in fits]
    k, d, M = 1, 2, 3
    alpha = mom.alphahat
    Sig = np.zeros((d, d))
    for s_ in range(M):
        delta = bhats[s_] - bhats[k]
        a_ks = alpha[k, s_].sum()
        quad = np.einsum("ilqr,q,r->il", mom.Lhat[s_], delta, delta)
        Sig += a_ks * (mom.sigma2hat[s_] * mom.Dhat[s_] + quad)
    for s_ in range(M):
        for m in range(M):
            us = mom.Dhat[s_] @ (bhats[s_] - bhats[k])
            um = mom.Dhat[m] @ (bhats[m] - bhats[k])
            Sig -= alpha[k, s_, m] * np.outer(us, um)
    Dinv = np.linalg.inv(mom.Dhat[k])
    expected = Dinv @ Sig @ Dinv
    V, repaired = asymptotic_covariance(mom, bhats, k)
    if not repaired:
        np.testing.assert_allclose(V, 0.5 * (expected + expected.T), rtol=1e-9)


def test_vhat_symmetric_psd(rng):
    params = random_params(rng, d=2, M=2)
    s = draw_sample(rng, 3000, params)
    for fit in ls_fit_all(s):
        np.testing.assert_allclose(fit.Vhat, fit.Vhat.T)
        assert np.linalg.eigvalsh(fit.Vhat).min() >= 0


def test_collinear_design_raises(rng):
    n = 100
    x = rng.normal(size=n)
    X = np.column_stack([x, 2.0 * x])
    s = MixtureSample(Y=rng.normal(size=n), X=X, P=np.ones((n, 1)))
    with pytest.raises(SingularDesign):
        ls_estimate(s, 0)
