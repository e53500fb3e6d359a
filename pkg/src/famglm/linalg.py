"""Dense linear algebra used by the factor and simulation code.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The eigensolver
is LAPACK's symmetric driver with a fixed ordering and sign convention on top,
so identical inputs always give identical outputs.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, NonSymmetric, NotPositiveDefinite, ShapeMismatch

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class EigenResult:
    """Full spectrum of a symmetric matrix.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors[:, j]``
    pairs with ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ShapeMismatch(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFinite(f"{name} has NaN or infinite entries")
    return M


def _check_symmetric(M):
    scale = np.max(np.abs(M))
    asym = np.max(np.abs(M - M.T))
    if asym > SYMMETRY_RTOL * scale:
        raise NonSymmetric(f"asymmetry {asym:.3e} exceeds {SYMMETRY_RTOL:g} x max|entry| ({scale:.3e})")


def fix_signs(V):
    """Flip columns so each one's largest-magnitude entry is nonnegative.

    Ties in magnitude are resolved by the lowest row index.
    """
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[lead, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    V *= signs
    return V


def sym_eigen(M):
    """Eigendecomposition of a real symmetric matrix.

    Raises NonSymmetric when ``max|M - M^T|`` exceeds 1e-12 times ``max|M|``
    and NonFinite for NaN/Inf input.
    """
    M = _as_square(M)
    _check_symmetric(M)
    w, V = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    return EigenResult(eigenvalues=w[order], eigenvectors=fix_signs(V[:, order]))


def cholesky(S):
    """Lower-triangular ``L`` with ``L @ L.T == S`` for symmetric positive definite ``S``."""
    S = _as_square(S)
    _check_symmetric(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(L) <= 0):
        raise NotPositiveDefinite("non-positive pivot")
    return L


def vec(M):
    """Stack the columns of ``M`` into one vector (entry (i, j) lands at ``i + rows*j``)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        return M.copy()
    return M.reshape(-1, order="F")


def unvec(x, rows, cols):
    """Inverse of :func:`vec`."""
    x = np.asarray(x, dtype=np.float64)
    if x.size != rows * cols:
        raise ShapeMismatch(f"cannot reshape {x.size} entries into {rows}x{cols}")
    return x.reshape((rows, cols), order="F")


def vec_stack(X):
    """Row-wise :func:`vec` of a stack of matrices with shape (n, rows, cols)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    return np.ascontiguousarray(X.transpose(0, 2, 1)).reshape(n, -1)


def unvec_stack(Z, rows, cols):
    """Inverse of :func:`vec_stack`."""
    Z = np.asarray(Z, dtype=np.float64)
    return np.ascontiguousarray(Z.reshape(Z.shape[0], cols, rows).transpose(0, 2, 1))
