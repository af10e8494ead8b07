"""Core data types for mixture-of-regressions samples.

A sample consists of responses Y, a regressor matrix X and a row of known
mixing probabilities per observation.  Component parameters (regression
coefficients, error variance, regressor mean and covariance) are carried
either structured (:class:`ComponentParams`) or flattened into a single
parameter vector (:class:`TauVector`) whose fixed layout every downstream
module (Hessian indexing, information sub-blocks) relies on.

Flat layout, per component m = 0..M-1, in order:

    b[0..d-1],  mu[0..d-1],  vech-lower(Sigma)  (row-major lower triangle),
    sigma2

so each block has length 2*d + d*(d+1)/2 + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_ROW_TOL = 1e-12


@dataclass(frozen=True)
class ModelDims:
    """Sample size n, regressor count d and component count M."""

    n: int
    d: int
    M: int

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.M < 1:
            raise ValueError("n, d and M must all be >= 1")
        if self.n <= self.d:
            raise ValueError("need n > d for nonsingular moment matrices")

    @property
    def block_size(self) -> int:
        """Length of one component's block in the flat parameter vector."""
        d = self.d
        return 2 * d + d * (d + 1) // 2 + 1

    @property
    def p_total(self) -> int:
        """Total length of the flat parameter vector."""
        return self.M * self.block_size


def _as_readonly(a, dtype=float):
    out = np.ascontiguousarray(np.asarray(a, dtype=dtype))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MixtureSample:
    """Observed data: responses, regressors and per-row mixing probabilities.

    ``latent`` optionally records the true component of each observation
    (0-based); it is produced by simulators for diagnostics only and is
    never read by any estimator.
    """

    Y: np.ndarray
    X: np.ndarray
    P: np.ndarray
    latent: np.ndarray | None = None
    dims: ModelDims = field(init=False)

    def __post_init__(self):
        Y = _as_readonly(self.Y)
        X = _as_readonly(self.X)
        P = _as_readonly(self.P)
        if Y.ndim != 1 or X.ndim != 2 or P.ndim != 2:
            raise ValueError("Y must be 1-d, X and P must be 2-d")
        n = Y.shape[0]
        if X.shape[0] != n or P.shape[0] != n:
            raise ValueError("Y, X and P must have the same number of rows")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "P", P)
        if self.latent is not None:
            object.__setattr__(self, "latent", _as_readonly(self.latent, dtype=int))
        object.__setattr__(self, "dims", ModelDims(n, X.shape[1], P.shape[1]))


def validate_sample(s: MixtureSample) -> list[str]:
    """Return a list of invariant violations (empty when the sample is valid).

    Diagnostic only: never raises.  Each message names the offending row.
    """
    violations = []
    if not np.all(np.isfinite(s.Y)):
        violations.append("Y contains non-finite entries")
    if not np.all(np.isfinite(s.X)):
        violations.append("X contains non-finite entries")
    bad = np.where((s.P < 0) | (s.P > 1))[0]
    for j in np.unique(bad):
        violations.append(f"row {j}: probability out of [0,1]")
    sums = s.P.sum(axis=1)
    for j in np.where(np.abs(sums - 1.0) > PROB_ROW_TOL)[0]:
        violations.append(f"row {j}: row sum != 1 (got {sums[j]!r})")
    if s.latent is not None:
        for j in np.where((s.latent < 0) | (s.latent >= s.dims.M))[0]:
            violations.append(f"row {j}: latent label out of range")
    return violations


@dataclass(frozen=True)
class ComponentParams:
    """Per-component parameters: coefficients b, error variance sigma2,
    regressor mean mu and regressor covariance Sigma."""

    b: np.ndarray
    sigma2: float
    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        b = _as_readonly(self.b)
        mu = _as_readonly(self.mu)
        Sigma = _as_readonly(self.Sigma)
        d = b.shape[0]
        if mu.shape != (d,) or Sigma.shape != (d, d):
            raise ValueError("b, mu and Sigma dimensions disagree")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def d(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class TauVector:
    """Flat parameter vector with the layout documented at module level."""

    dims: ModelDims
    values: np.ndarray

    def __post_init__(self):
        values = _as_readonly(self.values)
        if values.shape != (self.dims.p_total,):
            raise ValueError(
                f"expected {self.dims.p_total} entries, got {values.shape}"
            )
        object.__setattr__(self, "values", values)


def vech_lower(A: np.ndarray) -> np.ndarray:
    """Row-major lower triangle of a square matrix as a flat vector."""
    d = A.shape[0]
    i, j = np.tril_indices(d)
    return A[i, j]


def unvech_lower(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`vech_lower`; rebuilds the full symmetric matrix."""
    A = np.zeros((d, d))
    i, j = np.tril_indices(d)
    A[i, j] = v
    A[j, i] = v
    return A


def b_indices(dims: ModelDims, k: int) -> np.ndarray:
    """Flat-vector indices of component k's coefficient vector b."""
    if not 0 <= k < dims.M:
        raise ValueError(f"component index {k} out of range")
    start = k * dims.block_size
    return np.arange(start, start + dims.d)


def flatten(params: list[ComponentParams], dims: ModelDims | None = None) -> TauVector:
    """Pack structured per-component parameters into a flat vector.

    ``dims`` defaults to the minimal ModelDims consistent with the list;
    pass the sample's dims when one is at hand.
    """
    if not params:
        raise ValueError("need at least one component")
    d = params[0].d
    if any(p.d != d for p in params):
        raise ValueError("components disagree on regressor dimension d")
    M = len(params)
    if dims is None:
        dims = ModelDims(n=d + 1, d=d, M=M)
    elif dims.d != d or dims.M != M:
        raise ValueError("dims inconsistent with the parameter list")
    blocks = []
    for p in params:
        blocks.extend([p.b, p.mu, vech_lower(p.Sigma), [p.sigma2]])
    return TauVector(dims, np.concatenate([np.asarray(b, dtype=float) for b in blocks]))


def unflatten(tau: TauVector) -> list[ComponentParams]:
    """Unpack a flat parameter vector into per-component parameters."""
    dims = tau.dims
    d, L = dims.d, dims.block_size
    nv = d * (d + 1) // 2
    out = []
    for m in range(dims.M):
        blk = tau.values[m * L : (m + 1) * L]
        out.append(
            ComponentParams(
                b=blk[:d],
                mu=blk[d : 2 * d],
                Sigma=unvech_lower(blk[2 * d : 2 * d + nv], d),
                sigma2=float(blk[2 * d + nv]),
            )
        )
    return out
