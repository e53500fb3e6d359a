"""Bilinear matrix factor model ``X = R Z C^T + E``.

Loadings come from one spectral pass over the row and column second-moment
matrices; the number of factors in each direction is picked by the largest
ratio of consecutive eigenvalues. A corpus is an array of shape (n, p1, p2).
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, EmptyCorpus, RankTooLarge, ShapeMismatch
from .linalg import sym_eigen

# eigenvalues below this fraction of the leading one count as zero
ZERO_EIG_RTOL = 1e-12


@dataclass(frozen=True)
class FactorLoadings:
    """Row loading ``R`` (p1 x k1) and column loading ``C`` (p2 x k2).

    Normalised so that ``R.T @ R == p1 * I`` and ``C.T @ C == p2 * I``.
    """

    R: np.ndarray
    C: np.ndarray
    row_eigenvalues: np.ndarray
    col_eigenvalues: np.ndarray

    @property
    def p1(self):
        return self.R.shape[0]

    @property
    def p2(self):
        return self.C.shape[0]

    @property
    def k1(self):
        return self.R.shape[1]

    @property
    def k2(self):
        return self.C.shape[1]

    def rotated(self, H1, H2):
        """Loadings ``R H1``, ``C H2`` for orthogonal ``H1``, ``H2``; the constraints still hold."""
        return FactorLoadings(self.R @ H1, self.C @ H2, self.row_eigenvalues, self.col_eigenvalues)


def as_corpus(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ShapeMismatch(f"corpus must have shape (n, p1, p2), got {X.shape}")
    if X.shape[0] == 0:
        raise EmptyCorpus("corpus has no samples")
    return X


def moment_matrices(X, center=False):
    """Row and column second-moment matrices of a corpus.

    Returns ``(M_R, M_C)`` with ``M_R = sum_i X_i X_i^T / (n p1 p2)`` and
    ``M_C = sum_i X_i^T X_i / (n p1 p2)``. With ``center=True`` the sample
    mean matrix is subtracted from every ``X_i`` first.
    """
    X = as_corpus(X)
    n, p1, p2 = X.shape
    if center:
        if n < 2:
            raise EmptyCorpus("centering needs at least two samples")
        X = X - X.mean(axis=0)
    scale = 1.0 / (n * p1 * p2)
    M_R = np.tensordot(X, X, axes=([0, 2], [0, 2])) * scale
    M_C = np.tensordot(X, X, axes=([0, 1], [0, 1])) * scale
    return 0.5 * (M_R + M_R.T), 0.5 * (M_C + M_C.T)


def eigen_ratio_rank(eigenvalues, p):
    """Index (1-based) maximising ``lambda_j / lambda_{j+1}`` for ``j <= ceil(p/2)``.

    The search stops before the first denominator below ``1e-12 * lambda_1``.
    Ratios equal to the maximum up to 1e-12 relative are ties and go to the
    smallest index.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size == 0 or not lam[0] > 0:
        raise DegenerateSpectrum("leading eigenvalue must be positive")
    jmax = min(math.ceil(p / 2), lam.size - 1)
    ratios = []
    for j in range(jmax):
        if lam[j + 1] < ZERO_EIG_RTOL * lam[0]:
            break
        ratios.append(lam[j] / lam[j + 1])
    if not ratios:
        return 1
    ratios = np.array(ratios)
    best = ratios.max()
    return int(np.flatnonzero(ratios >= best * (1 - 1e-12))[0]) + 1


def select_ranks(row_eigenvalues, col_eigenvalues, p1, p2):
    return eigen_ratio_rank(row_eigenvalues, p1), eigen_ratio_rank(col_eigenvalues, p2)


def estimate_loadings(M_R, M_C, k1, k2):
    """``sqrt(p)`` times the top-k eigenvectors of each moment matrix."""
    row = sym_eigen(M_R)
    col = sym_eigen(M_C)
    p1, p2 = len(row.eigenvalues), len(col.eigenvalues)
    if not (1 <= k1 <= p1 and 1 <= k2 <= p2):
        raise RankTooLarge(f"ranks ({k1}, {k2}) outside [1, {p1}] x [1, {p2}]")
    R = math.sqrt(p1) * row.eigenvectors[:, :k1]
    C = math.sqrt(p2) * col.eigenvectors[:, :k2]
    return FactorLoadings(R, C, row.eigenvalues, col.eigenvalues)


def fit_loadings(X, ranks=None, center=False):
    """Moments, rank selection (unless ``ranks`` is given) and loadings in one call."""
    X = as_corpus(X)
    _, p1, p2 = X.shape
    M_R, M_C = moment_matrices(X, center=center)
    if ranks is None:
        row = sym_eigen(M_R).eigenvalues
        col = sym_eigen(M_C).eigenvalues
        ranks = select_ranks(row, col, p1, p2)
    return estimate_loadings(M_R, M_C, *ranks)


def _check_shapes(loadings, X):
    if X.shape[1:] != (loadings.p1, loadings.p2):
        raise ShapeMismatch(f"samples are {X.shape[1]}x{X.shape[2]}, loadings expect {loadings.p1}x{loadings.p2}")


def extract_scores(loadings, X):
    """Factor scores ``R^T X_i C / (p1 p2)``, shape (n, k1, k2)."""
    X = as_corpus(X)
    _check_shapes(loadings, X)
    return (loadings.R.T @ X @ loadings.C) / (loadings.p1 * loadings.p2)


def reconstruct(loadings, scores):
    """``R Z_i C^T`` for every score matrix."""
    Z = np.asarray(scores, dtype=np.float64)
    if Z.ndim == 2:
        Z = Z[None]
    if Z.shape[1:] != (loadings.k1, loadings.k2):
        raise ShapeMismatch(f"scores are {Z.shape[1:]}, loadings expect ({loadings.k1}, {loadings.k2})")
    return loadings.R @ Z @ loadings.C.T


def reconstruction_errors(X, loadings, scores):
    """Per-sample ``||X_i - R Z_i C^T||_F^2 / (p1 p2)``."""
    X = as_corpus(X)
    _check_shapes(loadings, X)
    Xhat = reconstruct(loadings, scores)
    if Xhat.shape != X.shape:
        raise ShapeMismatch("scores and corpus have different sample counts")
    resid = X - Xhat
    return np.einsum("nij,nij->n", resid, resid) / (loadings.p1 * loadings.p2)


def reconstruction_error(X, loadings, scores):
    """Mean squared Frobenius residual per entry, averaged over the corpus."""
    return float(np.mean(reconstruction_errors(X, loadings, scores)))
