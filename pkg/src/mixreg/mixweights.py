"""Minimax weights for component-wise moment estimation.

The Gram matrix of the concentration rows,

    G[l, i] = (1/n) sum_j P[j, l] * P[j, i],

determines for each target component k a weight vector a^k with the
biorthogonality property

    (1/n) sum_j a_j^k P[j, m] = delta(k, m)   for all m,

so that weighted empirical averages are unbiased for component-k moments.
The weights are obtained as row k of G^{-1} applied to each probability row
(equivalent to the cofactor expansion, but numerically stable for M > 3);
they may be negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularGram

#: determinant threshold below which the Gram matrix is treated as singular
DET_EPS = 1e-12


@dataclass(frozen=True)
class GramMatrix:
    G: np.ndarray
    det: float


@dataclass(frozen=True)
class WeightVector:
    k: int
    a: np.ndarray


def gram_matrix(P: np.ndarray) -> GramMatrix:
    """Gram matrix of the concentration rows of P (n x M)."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    G = P.T @ P / n
    G = 0.5 * (G + G.T)
    return GramMatrix(G=G, det=float(np.linalg.det(G)))


def minimax_weights(P: np.ndarray, k: int, gram: GramMatrix | None = None) -> WeightVector:
    """Minimax weight vector for target component k (0-based).

    Raises SingularGram when det(G) <= DET_EPS, i.e. the concentration
    design cannot separate the components.
    """
    P = np.asarray(P, dtype=float)
    M = P.shape[1]
    if not 0 <= k < M:
        raise ValueError(f"component index {k} out of range for M={M}")
    if gram is None:
        gram = gram_matrix(P)
    if gram.det <= DET_EPS:
        raise SingularGram(
            f"det(Gram) = {gram.det:.3e} <= {DET_EPS}; concentrations are collinear"
        )
    e_k = np.zeros(M)
    e_k[k] = 1.0
    row = np.linalg.solve(gram.G, e_k)
    return WeightVector(k=k, a=P @ row)


def psd_repair(A: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """Clamp the eigenvalues of a symmetric matrix from below.

    Returns A itself when no eigenvalue lies below ``floor`` (caller can
    detect repair via identity), otherwise the clamped reconstruction.
    """
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    if w.min() >= floor:
        return A
    w = np.maximum(w, floor)
    B = (V * w) @ V.T
    return 0.5 * (B + B.T)
