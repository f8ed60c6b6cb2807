"""Symmetric eigensolver wrapper and PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, empirical_covariance

__all__ = ["EigenPair", "EigenError", "eigenpairs", "top_eigenpair", "pca", "fix_sign"]

SYMMETRY_TOL = 1e-10
SIGN_TOL = 1e-12


class EigenError(ValueError):
    """Input is not a finite symmetric matrix."""


@dataclass(frozen=True)
class EigenPair:
    """An eigenvalue and its unit eigenvector under the sign rule."""

    value: float
    vector: np.ndarray


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first entry with magnitude above 1e-12 is positive."""
    v = np.asarray(v, dtype=float)
    big = np.flatnonzero(np.abs(v) > SIGN_TOL)
    if big.size and v[big[0]] < 0:
        return -v
    return v.copy()


def _check(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EigenError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise EigenError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > SYMMETRY_TOL * scale:
        raise EigenError("matrix is not symmetric")
    return A


def eigenpairs(A: np.ndarray) -> list[EigenPair]:
    """All eigenpairs of a symmetric matrix, by decreasing eigenvalue.

    Uses a full symmetric decomposition (LAPACK ``syevd`` through
    :func:`numpy.linalg.eigh`). Equal eigenvalues keep the solver's order
    reversed, which is deterministic for a fixed input.
    """
    A = _check(A)
    w, V = np.linalg.eigh(A)
    order = np.arange(w.size)[::-1]
    return [EigenPair(float(w[i]), fix_sign(V[:, i])) for i in order]


def top_eigenpair(A: np.ndarray) -> EigenPair:
    """The largest eigenvalue and its eigenvector."""
    return eigenpairs(A)[0]


def pca(ds: Dataset) -> list[EigenPair]:
    """Principal directions of a centered dataset, by decreasing variance."""
    return eigenpairs(empirical_covariance(ds.values))
