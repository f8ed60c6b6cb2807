"""Incremental Gram-Schmidt over an evaluated function family.

An :class:`OrthoBasis` holds orthonormal functions of the substituted
variables ``Z_1, Z_2, ...``. Each entry is kept twice: as its evaluation on
the training sample (for O(N) inner products) and as a coefficient row over
the raw monomials processed so far (for out-of-sample evaluation).

:class:`ReducedMoments` tracks the second moments of the reduced data
``d_j(X) = X - sum_f E[X f] f`` through the deflation recursions

    Sigma_{j+1} = Sigma_j - sum_f E[f X] E[f X]^T      (covariance mode)
    sigma_{j+1} = sigma_j - sum_f E[f X]**2             (variance mode)

so ``d_j`` never has to be materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .dataset import Dataset, empirical_covariance, empirical_variance_vector
from .family import FunctionFamily, Monomial, evaluate, evaluate_many

__all__ = [
    "OrthoBasis",
    "ReducedMoments",
    "NumericalError",
    "init",
    "extend",
    "reduced_moments_direct",
    "transform",
    "DROP_RTOL",
    "REFINE_TOL",
]

DROP_RTOL = 1e-10
REFINE_TOL = 1e-10
UNIT_TOL = 1e-8

COVARIANCE = "covariance"
VARIANCE = "variance"

Direction = Union[int, np.ndarray]


class NumericalError(ArithmeticError):
    """Non-finite evaluations, violated invariants or similar numeric failure."""


class OrthoBasis:
    """Orthonormal functions built by incremental Gram-Schmidt.

    Parameters
    ----------
    n_samples : int
        Training sample size ``N``.
    track_coefficients : bool
        Keep the triangular coefficient matrix over raw monomials. Needed for
        out-of-sample evaluation and serialization; costs ``O(K^2)`` memory.
    """

    def __init__(self, n_samples: int, track_coefficients: bool = True):
        self.n_samples = int(n_samples)
        self.track_coefficients = track_coefficients
        self.monomials: list[Monomial] = []
        self.entry_source: list[int] = []
        self.norms: list[float] = []
        self.dropped: list[Monomial] = []
        self.substituted: list[Direction] = []
        self._evals = np.empty((self.n_samples, 0))
        self._coef = np.zeros((0, 0))
        self._size = 0
        self._Z = np.empty((self.n_samples, 0))
        self.last_norm2 = 0.0

    def __len__(self) -> int:
        return self._size

    @property
    def evaluations(self) -> np.ndarray:
        """``N x K`` training-sample evaluations of the orthonormal entries."""
        return self._evals[:, : self._size]

    @property
    def coefficients(self) -> np.ndarray:
        """``K x R`` coefficients over ``monomials`` (R processed monomials)."""
        return self._coef[: self._size, : len(self.monomials)]

    @property
    def substituted_columns(self) -> np.ndarray:
        """Training values of ``Z_1..Z_j``."""
        return self._Z

    def _reserve(self, extra: int) -> None:
        need = self._size + extra
        cap = self._evals.shape[1]
        if need > cap:
            new_cap = max(need, 2 * cap, 16)
            grown = np.empty((self.n_samples, new_cap))
            grown[:, : self._size] = self._evals[:, : self._size]
            self._evals = grown
        if self.track_coefficients:
            rows_needed = need
            cols_needed = len(self.monomials) + extra
            r, c = self._coef.shape
            if rows_needed > r or cols_needed > c:
                new_r = max(rows_needed, 2 * r, 16)
                new_c = max(cols_needed, 2 * c, 16)
                grown = np.zeros((new_r, new_c))
                grown[:r, :c] = self._coef
                self._coef = grown

    def add_column(self, direction: Direction, column: np.ndarray) -> None:
        """Record a newly substituted variable and its training values."""
        self.substituted.append(direction)
        self._Z = np.column_stack([self._Z, column])

    def absorb(self, monomial: Monomial, raw: np.ndarray) -> np.ndarray | None:
        """Orthogonalize one evaluated monomial against the current entries.

        Returns the new orthonormal evaluation, or ``None`` when the
        post-projection norm squared is at most
        ``DROP_RTOL * (1 + initial norm squared)`` and the monomial is dropped.
        """
        n = self.n_samples
        self._reserve(1)
        r = len(self.monomials)
        self.monomials.append(monomial)

        g = np.array(raw, dtype=float)
        Q = self.evaluations
        proj = np.zeros(self._size)
        with np.errstate(over="ignore", invalid="ignore"):
            initial = float(g @ g) / n
            if self._size:
                c = Q.T @ g / n
                g -= Q @ c
                proj += c
                c = Q.T @ g / n
                if np.max(np.abs(c)) > REFINE_TOL:
                    g -= Q @ c
                    proj += c
            norm2 = float(g @ g) / n
        self.last_norm2 = norm2
        if not np.isfinite(norm2):
            raise NumericalError(f"non-finite evaluation of {monomial}")
        if norm2 <= DROP_RTOL * (1.0 + initial):
            self.dropped.append(monomial)
            return None

        norm = np.sqrt(norm2)
        k = self._size
        self._evals[:, k] = g / norm
        if self.track_coefficients:
            row = np.zeros(self._coef.shape[1])
            row[r] = 1.0
            if k:
                row[:r] -= proj @ self._coef[:k, :r]
            self._coef[k] = row / norm
        self.entry_source.append(r)
        self.norms.append(norm)
        self._size += 1
        return self._evals[:, k]

    def substitute(self, rows: np.ndarray) -> np.ndarray:
        """Values of the substituted variables on preprocessed ``rows``."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        cols = []
        for direction in self.substituted:
            if isinstance(direction, (int, np.integer)):
                cols.append(rows[:, int(direction)])
            else:
                cols.append(rows @ direction)
        return np.column_stack(cols) if cols else np.empty((rows.shape[0], 0))

    def evaluate(self, rows: np.ndarray) -> np.ndarray:
        """Evaluate every orthonormal entry out of sample via the coefficients."""
        if not self.track_coefficients:
            raise ValueError("basis was built without coefficient tracking")
        Z = self.substitute(rows)
        raw = evaluate_many(self.monomials, Z)
        return raw @ self.coefficients.T

    def gram(self) -> np.ndarray:
        """Empirical Gram matrix of the entries (identity up to rounding)."""
        Q = self.evaluations
        return Q.T @ Q / self.n_samples

    @classmethod
    def from_parts(cls, monomials, coefficients, substituted, dropped=(), norms=(),
                   entry_source=()) -> "OrthoBasis":
        """Rebuild a coefficient-only basis (no training evaluations)."""
        coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
        basis = cls(0, track_coefficients=True)
        basis.monomials = list(monomials)
        basis.dropped = list(dropped)
        basis.norms = list(norms)
        basis.entry_source = list(entry_source)
        basis.substituted = list(substituted)
        basis._coef = coefficients.reshape(-1, len(basis.monomials)) if basis.monomials \
            else np.zeros((0, 0))
        basis._size = basis._coef.shape[0]
        return basis


@dataclass
class ReducedMoments:
    """Second moments of the reduced data.

    Attributes
    ----------
    mode : {"covariance", "variance"}
    sigma_matrix : ndarray or None
        ``Sigma_j`` (covariance mode).
    sigma_vector : ndarray
        ``sigma_j``; in covariance mode the diagonal of ``Sigma_j``.
    proj_coeffs : list of ndarray
        ``E[X f]`` for each basis entry ``f`` in order.
    """

    mode: str
    sigma_matrix: np.ndarray | None
    sigma_vector: np.ndarray
    proj_coeffs: list[np.ndarray] = field(default_factory=list)

    def deflate(self, X: np.ndarray, F: np.ndarray) -> None:
        """Apply the recursion for newly added orthonormal evaluations ``F``."""
        if F.shape[1] == 0:
            return
        A = X.T @ F / X.shape[0]
        self.proj_coeffs.extend(A.T.copy())
        if self.mode == COVARIANCE:
            S = self.sigma_matrix - A @ A.T
            upper = np.triu(S, 1)
            diag = np.diag(self.sigma_matrix) - np.einsum("ik,ik->i", A, A)
            S = upper + upper.T
            S[np.diag_indices_from(S)] = diag
            self.sigma_matrix = S
            self.sigma_vector = diag.copy()
        else:
            self.sigma_vector = self.sigma_vector - np.einsum("ik,ik->i", A, A)

    def copy(self) -> "ReducedMoments":
        return ReducedMoments(
            self.mode,
            None if self.sigma_matrix is None else self.sigma_matrix.copy(),
            self.sigma_vector.copy(),
            list(self.proj_coeffs),
        )


def init(
    ds: Dataset,
    fam: FunctionFamily,
    mode: str = COVARIANCE,
    *,
    track_coefficients: bool = True,
) -> tuple[OrthoBasis, ReducedMoments]:
    """Start a fit: empty basis (plus the constant) and ``Sigma_1`` / ``sigma_1``.

    When the family includes the constant it is orthogonalized first; on
    centered data its deflation term ``E[X]`` vanishes up to rounding.
    """
    if mode not in (COVARIANCE, VARIANCE):
        raise ValueError(f"unknown mode {mode!r}")
    if fam.d != ds.n_features:
        raise ValueError(f"family has d={fam.d}, dataset has {ds.n_features} features")
    X = ds.values
    basis = OrthoBasis(ds.n_samples, track_coefficients)
    if mode == COVARIANCE:
        cov = empirical_covariance(X)
        moments = ReducedMoments(mode, cov, np.diag(cov).copy())
    else:
        moments = ReducedMoments(mode, None, empirical_variance_vector(X))
    if fam.constant is not None:
        f = basis.absorb(fam.constant, np.ones(ds.n_samples))
        if f is not None:
            moments.deflate(X, f[:, None])
    return basis, moments


def _direction_column(direction: Direction, ds: Dataset) -> tuple[Direction, np.ndarray]:
    d = ds.n_features
    if isinstance(direction, (int, np.integer)):
        idx = int(direction)
        if not 0 <= idx < d:
            raise ValueError(f"feature index {idx} outside 0..{d - 1}")
        return idx, ds.values[:, idx]
    nu = np.asarray(direction, dtype=float).ravel()
    if nu.shape != (d,):
        raise ValueError(f"direction has length {nu.size}, expected {d}")
    if abs(float(nu @ nu) - 1.0) > UNIT_TOL:
        raise ValueError("direction must have unit norm")
    return nu.copy(), ds.values @ nu


def extend(
    basis: OrthoBasis,
    moments: ReducedMoments,
    frontier: Sequence[Monomial],
    new_direction: Direction,
    ds: Dataset,
) -> tuple[OrthoBasis, ReducedMoments]:
    """Substitute the next variable and orthogonalize its frontier.

    Parameters
    ----------
    basis, moments
        State from :func:`init` or a previous call; updated in place and
        returned.
    frontier : sequence of Monomial
        Usually ``fam.frontier(j)`` for the ``j``-th substitution.
    new_direction : int or ndarray
        A feature index (selection) or a unit vector ``nu`` with
        ``Z_j = X nu`` (extraction).
    ds : Dataset
        The training data the basis was started on.
    """
    if ds.n_samples != basis.n_samples:
        raise ValueError("dataset size does not match the basis")
    direction, column = _direction_column(new_direction, ds)
    basis.add_column(direction, column)
    Z = basis.substituted_columns
    added = []
    for m in frontier:
        raw = evaluate(m, Z)
        if not np.all(np.isfinite(raw)):
            raise NumericalError(f"non-finite evaluation of {m}")
        f = basis.absorb(m, raw)
        if f is not None:
            added.append(f)
    if added:
        moments.deflate(ds.values, np.column_stack(added))
    return basis, moments


def reduced_moments_direct(basis: OrthoBasis, ds: Dataset, mode: str = COVARIANCE) -> ReducedMoments:
    """Moments of ``d_j(X)`` computed from explicit residual rows."""
    X = ds.values
    F = basis.evaluations
    coeffs = X.T @ F / ds.n_samples
    D = X - F @ coeffs.T
    if mode == COVARIANCE:
        cov = empirical_covariance(D)
        return ReducedMoments(mode, cov, np.diag(cov).copy(), list(coeffs.T))
    return ReducedMoments(mode, None, empirical_variance_vector(D), list(coeffs.T))


def transform(model, new_rows: np.ndarray) -> np.ndarray:
    """Apply a fitted model's preprocessing, then project or gather.

    Extraction models map ``x`` to ``(nu_1^T x, ..., nu_m^T x)``; selection
    models return the selected columns in selection order.
    """
    rows = np.atleast_2d(np.asarray(new_rows, dtype=float))
    d = model.n_features
    if rows.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {rows.shape[1]}")
    rows = model.preprocessing.apply(rows)
    selected = getattr(model, "selected", None)
    if selected is not None:
        return rows[:, list(selected)]
    return rows @ np.asarray(model.directions).reshape(-1, d).T
