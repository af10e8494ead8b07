"""Confidence ellipsoids for regression coefficients.

An ellipsoid is the set {beta : (beta - center)' A (beta - center) <= q}
with q the chi-square quantile at the requested confidence level.  For the
nonparametric fit the shape matrix is n * Vhat^{-1}; for the likelihood
based fits it is the information sub-block precision matrix (which already
scales with n).  The boundary counts as covered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv

from .errors import SingularCovariance, UnsupportedDim
from .likelihood import InfoSubBlock
from .lsfit import COND_MAX, LsFitResult


@dataclass(frozen=True)
class Ellipsoid:
    center: np.ndarray
    shape: np.ndarray
    threshold: float
    kind: str  # "LS", "OS" or "EM"

    @property
    def d(self) -> int:
        return self.center.shape[0]


def chi2_quantile(d: int, prob: float) -> float:
    """Quantile Q with P(chi2_d <= Q) = prob, via the regularized lower
    incomplete gamma inverse."""
    if d < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie strictly between 0 and 1")
    return float(2.0 * gammaincinv(d / 2.0, prob))


def _checked_inverse(A: np.ndarray, what: str) -> np.ndarray:
    w = np.linalg.eigvalsh(A)
    if w.min() <= 0 or w.max() / w.min() > COND_MAX:
        raise SingularCovariance(f"{what} is not invertible (eigenvalues {w})")
    inv = np.linalg.inv(A)
    return 0.5 * (inv + inv.T)


def ls_ellipsoid(fit: LsFitResult, n: int, alpha: float) -> Ellipsoid:
    """Nonparametric ellipsoid with shape n * Vhat^{-1}."""
    shape = n * _checked_inverse(fit.Vhat, "Vhat")
    return Ellipsoid(
        center=fit.bhat.copy(),
        shape=shape,
        threshold=chi2_quantile(fit.bhat.shape[0], 1.0 - alpha),
        kind="LS",
    )


def info_ellipsoid(bhat: np.ndarray, sub: InfoSubBlock, alpha: float, kind: str = "EM") -> Ellipsoid:
    """Likelihood-based ellipsoid; the information sub-block is used as the
    shape matrix directly (no extra n factor)."""
    bhat = np.asarray(bhat, dtype=float)
    w = np.linalg.eigvalsh(sub.Iplus)
    if w.min() <= 0:
        raise SingularCovariance("information sub-block is not positive definite")
    return Ellipsoid(
        center=bhat,
        shape=sub.Iplus.copy(),
        threshold=chi2_quantile(bhat.shape[0], 1.0 - alpha),
        kind=kind,
    )


def contains(e: Ellipsoid, beta) -> bool:
    """Membership test; the boundary counts as covered."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != e.center.shape:
        raise ValueError(f"dimension mismatch: {beta.shape} vs {e.center.shape}")
    diff = beta - e.center
    return bool(diff @ e.shape @ diff <= e.threshold)


def volume(e: Ellipsoid) -> float:
    """Lebesgue volume: unit-ball volume * q^{d/2} / sqrt(det shape)."""
    d = e.d
    det = np.linalg.det(e.shape)
    if det <= 0:
        raise SingularCovariance("shape matrix has non-positive determinant")
    unit_ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return unit_ball * e.threshold ** (d / 2.0) / math.sqrt(det)


def boundary_points(e: Ellipsoid, count: int) -> np.ndarray:
    """(count, 2) points on the boundary of a 2-d ellipsoid, uniformly in
    the parametrizing angle."""
    if e.d != 2:
        raise UnsupportedDim(f"boundary_points requires d=2, got d={e.d}")
    w, V = np.linalg.eigh(e.shape)
    if w.min() <= 0:
        raise SingularCovariance("shape matrix is not positive definite")
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    t = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    circle = np.column_stack([np.cos(t), np.sin(t)])
    return e.center + math.sqrt(e.threshold) * circle @ inv_sqrt
