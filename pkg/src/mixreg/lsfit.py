"""Weighted least squares estimation and its sandwich covariance.

For a target component k the coefficient estimate solves the weighted
normal equations

    (X' A X) b = X' A Y,      A = diag(minimax weights for k),

which degenerates to ordinary least squares when M = 1.  The asymptotic
covariance of sqrt(n) (bhat - b^k) is estimated by the plug-in sandwich

    Vhat = Dhat^{-1} Sigmahat Dhat^{-1}

with Sigmahat assembled from weighted second and fourth regressor moments,
per-component residual variances and the concentration coefficients

    alphahat[k, s, q] = (1/n) sum_j (a_j^k)^2 P[j, s] P[j, q].

Because the weights can be negative, Vhat need not be positive definite in
small samples; it is then eigenvalue-clamped and the result flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDesign
from .mixweights import WeightVector, gram_matrix, minimax_weights, psd_repair
from .model import MixtureSample

#: condition number above which moment matrices are treated as singular
COND_MAX = 1e12

#: lower clamp for residual-variance estimates (negative weights can push
#: them below zero)
SIGMA2_FLOOR = 1e-12


def _solve_spd_checked(A, rhs, err_msg):
    """Solve the symmetric system A x = rhs, raising SingularDesign when
    A's condition number exceeds COND_MAX."""
    w = np.linalg.eigvalsh(A)
    if w.min() <= 0 or w.max() / w.min() > COND_MAX:
        raise SingularDesign(err_msg)
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class MomentEstimates:
    """Plug-in moment estimates feeding the sandwich covariance.

    Dhat:      (M, d, d)       weighted second regressor moments
    Lhat:      (M, d, d, d, d) weighted fourth regressor moments
    sigma2hat: (M,)            residual variances (clamped from below)
    alphahat:  (M, M, M)       alphahat[k, s, q]
    sigma2_clamped: per-component flag, True where the raw estimate was
                    below SIGMA2_FLOOR
    """

    Dhat: np.ndarray
    Lhat: np.ndarray
    sigma2hat: np.ndarray
    alphahat: np.ndarray
    sigma2_clamped: np.ndarray

    @property
    def alpha_marginal(self) -> np.ndarray:
        """alphahat[k, s] = sum_q alphahat[k, s, q]."""
        return self.alphahat.sum(axis=2)


@dataclass(frozen=True)
class LsFitResult:
    k: int
    bhat: np.ndarray
    Vhat: np.ndarray
    moments: MomentEstimates
    repaired: bool


def ls_estimate(s: MixtureSample, k: int, weights: WeightVector | None = None) -> np.ndarray:
    """Weighted least squares coefficients for component k."""
    if weights is None:
        weights = minimax_weights(s.P, k)
    a = weights.a
    XtAX = (s.X * a[:, None]).T @ s.X
    XtAY = s.X.T @ (a * s.Y)
    return _solve_spd_checked(
        0.5 * (XtAX + XtAX.T),
        XtAY,
        f"weighted moment matrix X'AX for component {k} is ill-conditioned",
    )


def moment_estimates(
    s: MixtureSample,
    weights: list[WeightVector],
    bhats: list[np.ndarray],
) -> MomentEstimates:
    """Weighted moment estimates for all components at once."""
    n, d, M = s.dims.n, s.dims.d, s.dims.M
    X, Y, P = s.X, s.Y, s.P
    Dhat = np.empty((M, d, d))
    Lhat = np.empty((M, d, d, d, d))
    sigma2hat = np.empty(M)
    clamped = np.zeros(M, dtype=bool)
    alphahat = np.empty((M, M, M))
    for m in range(M):
        a = weights[m].a
        Dm = (X * a[:, None]).T @ X / n
        Dhat[m] = 0.5 * (Dm + Dm.T)
        Lhat[m] = np.einsum("j,ji,jl,jq,jr->ilqr", a, X, X, X, X) / n
        resid = Y - X @ bhats[m]
        s2 = float(a @ resid**2) / n
        if s2 < SIGMA2_FLOOR:
            s2, clamped[m] = SIGMA2_FLOOR, True
        sigma2hat[m] = s2
        ak2 = weights[m].a ** 2
        alphahat[m] = np.einsum("j,js,jq->sq", ak2, P, P) / n
    return MomentEstimates(Dhat, Lhat, sigma2hat, alphahat, clamped)


def asymptotic_covariance(
    moments: MomentEstimates,
    bhats: list[np.ndarray],
    k: int,
    repair_floor: float = 1e-10,
) -> tuple[np.ndarray, bool]:
    """Sandwich covariance estimate Vhat for component k.

    Returns (Vhat, repaired); ``repaired`` is True when the raw estimate
    was not positive semi-definite and had its eigenvalues clamped.
    """
    M, d = moments.Dhat.shape[0], moments.Dhat.shape[1]
    alpha = moments.alpha_marginal
    delta = np.stack([bhats[s_] - bhats[k] for s_ in range(M)])  # (M, d)
    u = np.einsum("sij,sj->si", moments.Dhat, delta)  # Dhat[s] @ delta[s]

    Sig = np.zeros((d, d))
    for s_ in range(M):
        quad = np.einsum("ilqr,q,r->il", moments.Lhat[s_], delta[s_], delta[s_])
        Sig += alpha[k, s_] * (moments.sigma2hat[s_] * moments.Dhat[s_] + quad)
    Sig -= np.einsum("sm,si,ml->il", moments.alphahat[k], u, u)
    Sig = 0.5 * (Sig + Sig.T)

    w = np.linalg.eigvalsh(moments.Dhat[k])
    if w.min() <= 0 or w.max() / w.min() > COND_MAX:
        raise SingularDesign(f"Dhat for component {k} is ill-conditioned")
    Dinv = np.linalg.inv(moments.Dhat[k])
    V = Dinv @ Sig @ Dinv
    V = 0.5 * (V + V.T)
    # relative floor: keeps the repaired matrix invertible at COND_MAX, so a
    # non-PD small-sample Vhat yields a huge but finite ellipsoid
    ev = np.linalg.eigvalsh(V)
    floor = max(repair_floor, ev.max() * 1e2 / COND_MAX)
    repaired = bool(ev.min() < floor)
    if repaired:
        V = psd_repair(V, floor)
    return V, repaired


def ls_fit_all(s: MixtureSample) -> list[LsFitResult]:
    """Full nonparametric pipeline for every component: weights,
    coefficient estimates, plug-in moments (shared) and per-component
    sandwich covariances."""
    gram = gram_matrix(s.P)
    weights = [minimax_weights(s.P, m, gram) for m in range(s.dims.M)]
    bhats = [ls_estimate(s, m, weights[m]) for m in range(s.dims.M)]
    moments = moment_estimates(s, weights, bhats)
    out = []
    for k in range(s.dims.M):
        Vhat, repaired = asymptotic_covariance(moments, bhats, k)
        out.append(LsFitResult(k=k, bhat=bhats[k], Vhat=Vhat, moments=moments, repaired=repaired))
    return out


def ls_fit(s: MixtureSample, k: int) -> LsFitResult:
    """As :func:`ls_fit_all`, for a single target component."""
    return ls_fit_all(s)[k]
