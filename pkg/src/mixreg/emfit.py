"""Pilot moment estimators and the EM algorithm.

The pilot assembles, per component, the weighted least squares coefficients
together with minimax-weighted mean/covariance/residual-variance estimates;
all of them are sqrt(n)-consistent, which is what the one-step and EM
refinements require of a starting point.

Each EM iteration computes posterior component probabilities (E-step) and
then the weighted-moment updates

    mu_m     <- weighted mean of X
    Sigma_m  <- weighted scatter of X about the *previous* mu_m
    b_m      <- weighted normal equations
    sigma2_m <- weighted mean squared residual at the *previous* b_m.

With the lagged mu/b updates each pair (new location, lagged spread) still
maximizes its conditional objective, so the procedure is a generalized EM
and the likelihood trace is non-decreasing.  Covariance eigenvalues and error variances are floored, so
degenerate directions (e.g. an intercept column) stay harmlessly pinned at
the floor.

Components are never re-ordered: the known per-observation concentrations
anchor the labels, so component m of the output estimates component m of
the pilot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComponent
from .likelihood import log_likelihood, posterior_weights
from .lsfit import COND_MAX, ls_estimate
from .mixweights import gram_matrix, minimax_weights, psd_repair
from .model import ComponentParams, MixtureSample, TauVector, flatten, unflatten


@dataclass(frozen=True)
class EmConfig:
    """Stopping rule and numeric floors for :func:`em_fit`."""

    delta: float = 1e-6
    max_iters: int = 500
    variance_floor: float = 1e-10

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")


@dataclass(frozen=True)
class EmResult:
    tau: TauVector
    iters: int
    converged: bool
    loglik_trace: np.ndarray


def _rescue_scatter(S_w, S_pool, variance_floor):
    """Floor the eigenvalues of a weighted scatter estimate.

    Negative minimax weights can drive eigenvalues negative even along
    directions where the data clearly vary; clamping those to a tiny
    absolute floor would turn the pilot density into a spike and starve
    the component on the very first E-step.  Degenerate eigenvalues are
    therefore lifted to the pooled (unweighted) scatter along the same
    eigendirection, while genuinely variation-free directions (e.g. an
    intercept column, where the pooled scatter vanishes too) stay at the
    absolute floor.  Returns (matrix, rescued flag)."""
    w, V = np.linalg.eigh(0.5 * (S_w + S_w.T))
    ref = np.einsum("id,ij,jd->d", V, S_pool, V)
    bad = w < np.maximum(variance_floor, 1e-6 * ref)
    if not bad.any():
        return S_w, False
    w = np.where(bad, np.maximum(variance_floor, ref), w)
    S = (V * w) @ V.T
    return 0.5 * (S + S.T), True


def pilot_estimates(
    s: MixtureSample,
    variance_floor: float = 1e-10,
    return_flags: bool = False,
):
    """Moment-based pilot parameter vector from minimax-weighted averages.

    With ``return_flags=True`` also returns a per-component list of bools
    marking components whose variance estimates needed rescue.
    """
    n = s.dims.n
    gram = gram_matrix(s.P)
    params = []
    flags = []
    for m in range(s.dims.M):
        wv = minimax_weights(s.P, m, gram)
        a = wv.a
        b = ls_estimate(s, m, wv)
        mu = (a @ s.X) / n
        centered = s.X - mu
        Sigma_w = (centered * a[:, None]).T @ centered / n
        Sigma_pool = centered.T @ centered / n
        Sigma, rescued = _rescue_scatter(Sigma_w, Sigma_pool, variance_floor)
        resid2 = (s.Y - s.X @ b) ** 2
        sigma2 = float(a @ resid2) / n
        pooled = float(resid2.mean())
        if sigma2 < max(variance_floor, 1e-6 * pooled):
            sigma2, rescued = max(variance_floor, pooled), True
        params.append(ComponentParams(b=b, sigma2=sigma2, mu=mu, Sigma=Sigma))
        flags.append(rescued)
    tau = flatten(params, s.dims)
    return (tau, flags) if return_flags else tau


def em_weights(s: MixtureSample, tau: TauVector) -> np.ndarray:
    """Posterior component probabilities (n, M) at the current parameters."""
    return posterior_weights(s, tau)


def em_iterate(
    s: MixtureSample, tau_i: TauVector, variance_floor: float = 1e-10
) -> TauVector:
    """One EM update step; raises DegenerateComponent on a starved component."""
    n, M = s.dims.n, s.dims.M
    w = em_weights(s, tau_i)
    wbar = w.sum(axis=0)
    prev = unflatten(tau_i)
    params = []
    for m in range(M):
        if wbar[m] < M * n * 1e-12:
            raise DegenerateComponent(
                f"component {m} has total posterior mass {wbar[m]:.3e}"
            )
        wm = w[:, m]
        mu = (wm @ s.X) / wbar[m]
        centered = s.X - prev[m].mu
        Sigma = (centered * wm[:, None]).T @ centered / wbar[m]
        Sigma = psd_repair(0.5 * (Sigma + Sigma.T), variance_floor)
        XtWX = (s.X * wm[:, None]).T @ s.X
        XtWX = 0.5 * (XtWX + XtWX.T)
        ev = np.linalg.eigvalsh(XtWX)
        if ev.min() <= 0 or ev.max() / ev.min() > COND_MAX:
            raise DegenerateComponent(
                f"weighted design for component {m} is ill-conditioned"
            )
        b = np.linalg.solve(XtWX, s.X.T @ (wm * s.Y))
        resid = s.Y - s.X @ prev[m].b
        sigma2 = max(float(wm @ resid**2) / wbar[m], variance_floor)
        params.append(ComponentParams(b=b, sigma2=sigma2, mu=mu, Sigma=Sigma))
    return flatten(params, s.dims)


def em_fit(s: MixtureSample, tau0: TauVector, cfg: EmConfig = EmConfig()) -> EmResult:
    """Iterate EM updates until the max-norm parameter change drops below
    cfg.delta or cfg.max_iters is reached.  Non-convergence within the
    iteration budget is reported via ``converged=False``, not raised."""
    trace = [log_likelihood(s, tau0)]
    tau = tau0
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        tau_next = em_iterate(s, tau, cfg.variance_floor)
        trace.append(log_likelihood(s, tau_next))
        change = np.max(np.abs(tau_next.values - tau.values))
        tau = tau_next
        if change < cfg.delta:
            converged = True
            break
    return EmResult(tau=tau, iters=iters, converged=converged, loglik_trace=np.array(trace))
