"""Gaussian mixture-of-regressions likelihood, score and information.

The per-observation log-likelihood is

    L_j(tau) = log( sum_m P[j, m] * N(X_j; mu_m, Sigma_m)
                                  * N(Y_j - X_j' b_m; 0, sigma2_m) ),

evaluated in log-space (log-sum-exp over components) so that widely
separated components do not underflow.  The score is analytic: each
component block contributes its Gaussian log-density gradient weighted by
the posterior component probability.  The Hessian is obtained by central
finite differences of the analytic score (one analytic mixture Hessian is
easy to get wrong; the FD-of-gradient route costs O(P) gradient sweeps and
is ample for a single Newton step).

The empirical Fisher information is the sum over observations of score
outer products, evaluated at a consistent estimate of tau.  Confidence
ellipsoids need the inverse of its b^k sub-block after inverting the whole
matrix; a scale-equilibrated eigenvalue pseudo-inverse is used so that
parameter directions carrying no information (for instance the "mean" and
"covariance" of a constant intercept regressor) drop out instead of
poisoning the inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import logsumexp

from .errors import InvalidParams, SingularHessian, SingularInfo
from .model import ComponentParams, MixtureSample, TauVector, b_indices, unflatten

#: relative eigenvalue cutoff for symmetric inversions (condition 1e12)
RCOND = 1e-12

_LOG2PI = np.log(2.0 * np.pi)


def _component_chol(p: ComponentParams):
    if p.sigma2 <= 0:
        raise InvalidParams(f"sigma2 = {p.sigma2} must be > 0")
    try:
        return cholesky(p.Sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvalidParams("Sigma is not positive definite") from exc


def component_loglik(s: MixtureSample, params: list[ComponentParams]) -> np.ndarray:
    """(n, M) matrix of log[ N(X_j; mu_m, Sigma_m) N(r_jm; 0, sigma2_m) ]."""
    n, d, M = s.dims.n, s.dims.d, s.dims.M
    out = np.empty((n, M))
    for m, p in enumerate(params):
        L = _component_chol(p)
        delta = s.X - p.mu
        z = solve_triangular(L, delta.T, lower=True)
        logdet = 2.0 * np.log(np.diag(L)).sum()
        log_x = -0.5 * (d * _LOG2PI + logdet + (z**2).sum(axis=0))
        r = s.Y - s.X @ p.b
        log_eps = -0.5 * (_LOG2PI + np.log(p.sigma2) + r**2 / p.sigma2)
        out[:, m] = log_x + log_eps
    return out


def posterior_weights(s: MixtureSample, tau: TauVector) -> np.ndarray:
    """(n, M) posterior component probabilities; rows sum to one.

    Rows with zero prior probability for a component get zero posterior.
    """
    comp = component_loglik(s, unflatten(tau))
    with np.errstate(divide="ignore"):
        logw = np.log(s.P) + comp
    logw -= logsumexp(logw, axis=1, keepdims=True)
    return np.exp(logw)


def log_likelihood(s: MixtureSample, tau: TauVector) -> float:
    comp = component_loglik(s, unflatten(tau))
    with np.errstate(divide="ignore"):
        terms = logsumexp(np.log(s.P) + comp, axis=1)
    return float(terms.sum())


def per_observation_scores(s: MixtureSample, tau: TauVector) -> np.ndarray:
    """(n, P) matrix of per-observation score vectors dL_j/dtau.

    Row sums over j give the full score; row outer products summed give the
    empirical information.
    """
    dims = tau.dims
    n, d = s.dims.n, s.dims.d
    params = unflatten(tau)
    w = posterior_weights(s, tau)
    U = np.zeros((n, dims.p_total))
    tril_i, tril_j = np.tril_indices(d)
    off_diag = (tril_i != tril_j).astype(float) + 1.0  # 2 off-diagonal, 1 diagonal
    for m, p in enumerate(params):
        wm = w[:, m]
        off = m * dims.block_size
        L = _component_chol(p)
        inv = solve_triangular(
            L.T, solve_triangular(L, np.eye(d), lower=True), lower=False
        )
        delta = s.X - p.mu
        q = delta @ inv  # Sigma^{-1} (X_j - mu), row-wise
        r = s.Y - s.X @ p.b
        # b block: (r / sigma2) X_j
        U[:, off : off + d] = wm[:, None] * (r / p.sigma2)[:, None] * s.X
        # mu block: Sigma^{-1} (X_j - mu)
        U[:, off + d : off + 2 * d] = wm[:, None] * q
        # vech(Sigma) block: G = (q q' - Sigma^{-1}) / 2, off-diagonals doubled
        G = 0.5 * (np.einsum("ji,jl->jil", q, q) - inv[None, :, :])
        U[:, off + 2 * d : off + 2 * d + tril_i.size] = (
            wm[:, None] * G[:, tril_i, tril_j] * off_diag
        )
        # sigma2 entry
        U[:, off + dims.block_size - 1] = wm * (
            r**2 / (2.0 * p.sigma2**2) - 0.5 / p.sigma2
        )
    return U


def score(s: MixtureSample, tau: TauVector) -> np.ndarray:
    """Analytic gradient of the log-likelihood with respect to tau."""
    return per_observation_scores(s, tau).sum(axis=0)


def hessian(s: MixtureSample, tau: TauVector, rel_step: float = 1e-5) -> np.ndarray:
    """Hessian of the log-likelihood by central differences of the score."""
    v = tau.values
    P = v.size
    H = np.empty((P, P))
    for i in range(P):
        h = rel_step * (1.0 + abs(v[i]))
        vp, vm = v.copy(), v.copy()
        vp[i] += h
        vm[i] -= h
        sp = score(s, TauVector(tau.dims, vp))
        sm = score(s, TauVector(tau.dims, vm))
        H[i] = (sp - sm) / (2.0 * h)
    return 0.5 * (H + H.T)


def _sym_pseudo_solve(A: np.ndarray, rhs: np.ndarray, rcond: float = RCOND):
    """Solve A x = rhs for symmetric A via an equilibrated eigen pseudo-
    inverse.  Returns (x, dropped_fraction_of_rhs): the relative norm of the
    rhs component lying in dropped eigendirections."""
    dscale = np.sqrt(np.abs(np.diag(A)))
    dscale[dscale == 0] = 1.0
    C = A / np.outer(dscale, dscale)
    w, V = np.linalg.eigh(C)
    aw = np.abs(w)
    keep = aw > rcond * aw.max() if aw.max() > 0 else np.zeros_like(aw, dtype=bool)
    g = V.T @ (rhs / dscale)
    gnorm = np.linalg.norm(g)
    dropped = np.linalg.norm(g[~keep]) / gnorm if gnorm > 0 else 0.0
    y = np.zeros_like(g)
    y[keep] = g[keep] / w[keep]
    return (V @ y) / dscale, dropped


def _sym_pseudo_inverse(A: np.ndarray, rcond: float = RCOND) -> np.ndarray:
    """Equilibrated eigen pseudo-inverse of a symmetric matrix.

    Equals the plain inverse whenever A is invertible at condition 1/rcond
    after diagonal scaling; otherwise information-free directions are
    projected out.
    """
    dscale = np.sqrt(np.abs(np.diag(A)))
    dscale[dscale == 0] = 1.0
    C = A / np.outer(dscale, dscale)
    w, V = np.linalg.eigh(C)
    aw = np.abs(w)
    if aw.max() == 0:
        raise SingularInfo("matrix is identically zero")
    keep = aw > rcond * aw.max()
    Cinv = (V[:, keep] / w[keep]) @ V[:, keep].T
    return Cinv / np.outer(dscale, dscale)


def one_step(s: MixtureSample, tau0: TauVector) -> TauVector:
    """Single Newton step on the log-likelihood from the pilot tau0."""
    g = score(s, tau0)
    H = hessian(s, tau0)
    step, dropped = _sym_pseudo_solve(H, g)
    if dropped > 1e-6:
        raise SingularHessian(
            "score has significant mass in the Hessian's null directions; "
            "pilot is outside the regular region"
        )
    return TauVector(tau0.dims, tau0.values - step)


@dataclass(frozen=True)
class InfoMatrix:
    """Empirical Fisher information: sum of per-observation score outer
    products evaluated at ``at_tau``."""

    I: np.ndarray
    at_tau: TauVector


@dataclass(frozen=True)
class InfoSubBlock:
    k: int
    Iplus: np.ndarray


def empirical_info(s: MixtureSample, tau_hat: TauVector) -> InfoMatrix:
    U = per_observation_scores(s, tau_hat)
    I = U.T @ U
    return InfoMatrix(I=0.5 * (I + I.T), at_tau=tau_hat)


def info_subblock(info: InfoMatrix, k: int) -> InfoSubBlock:
    """Precision matrix of b^k accounting for nuisance parameters:
    invert the information, extract the b^k rows/columns, invert again."""
    idx = b_indices(info.at_tau.dims, k)
    Iinv = _sym_pseudo_inverse(info.I)
    block = Iinv[np.ix_(idx, idx)]
    block = 0.5 * (block + block.T)
    w = np.linalg.eigvalsh(block)
    if w.min() <= 0 or w.max() / w.min() > 1.0 / RCOND:
        raise SingularInfo(
            f"information carries no invertible b-block for component {k}"
        )
    Iplus = np.linalg.inv(block)
    return InfoSubBlock(k=k, Iplus=0.5 * (Iplus + Iplus.T))
