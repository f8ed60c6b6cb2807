"""Feature extraction: GFR, GCA and plain PCA as a model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, Preprocessing
from .eigen import EigenPair, pca, top_eigenpair
from .family import FunctionFamily, build
from .invariants import check_distinct, check_extraction_traces
from .orthogonalizer import OrthoBasis, extend, init

__all__ = ["ExtractionModel", "gfr", "gca", "pca_model"]

THRESHOLD = "threshold"
EXHAUSTED = "exhausted_d"
ALL_CAPTURED = "all_captured"
MAX_FEATURES = "max_features"


@dataclass
class ExtractionModel:
    """Result of a linear feature-extraction fit.

    Attributes
    ----------
    algo : {"gfr", "gca", "pca"}
    directions : ndarray, shape (m, d)
        Rows are the extracted unit directions in extraction order.
    per_step_variance : ndarray, shape (m,)
        Variance captured at each accepted step: ``nu_j^T Sigma_j nu_j`` for
        GFR and PCA, ``rho_l^T Sigma_1 rho_l`` for GCA.
    stop_reason : str
        ``threshold``, ``exhausted_d``, ``all_captured`` or ``max_features``.
    epsilon : float
        The threshold as supplied.
    family : FunctionFamily
    basis : OrthoBasis or None
    components : tuple of int or None
        GCA only: 0-based principal-component indices ``L`` in selection
        order (components are numbered by decreasing eigenvalue).
    principal_values, principal_directions : ndarray or None
        GCA and PCA: all eigenvalues and the matching directions as rows.
    lambda_trace, trace_trace : ndarray
        ``lambda_max(Sigma_j)`` and ``trace(Sigma_j)`` for each evaluated j.
    excluded : list of tuple of int
        GCA only: the set ``E_j`` at every evaluated step.
    rejected_variance : float or None
        GFR only: the top eigenvalue of the step that triggered the stop.
    """

    algo: str
    directions: np.ndarray
    per_step_variance: np.ndarray
    stop_reason: str
    epsilon: float
    family: FunctionFamily | None
    basis: OrthoBasis | None
    preprocessing: Preprocessing = field(default_factory=Preprocessing)
    column_names: tuple[str, ...] = ()
    components: tuple[int, ...] | None = None
    principal_values: np.ndarray | None = None
    principal_directions: np.ndarray | None = None
    lambda_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    trace_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    excluded: list[tuple[int, ...]] = field(default_factory=list)
    rejected_variance: float | None = None

    @property
    def n_components(self) -> int:
        return self.directions.shape[0]

    @property
    def n_features(self) -> int:
        return self.directions.shape[1]

    def transform(self, rows: np.ndarray) -> np.ndarray:
        from .orthogonalizer import transform

        return transform(self, rows)


def _check_inputs(ds: Dataset, fam: FunctionFamily, epsilon: float) -> None:
    if fam.d != ds.n_features:
        raise ValueError(f"family has d={fam.d}, dataset has {ds.n_features} features")
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be a finite non-negative number, got {epsilon}")


def _limit(ds: Dataset, max_features: int | None) -> int:
    d = ds.n_features
    if max_features is None:
        return d
    if max_features < 0:
        raise ValueError("max_features must be non-negative")
    return min(d, int(max_features))


def gfr(
    ds: Dataset,
    fam: FunctionFamily,
    epsilon: float,
    *,
    max_features: int | None = None,
    complete: bool = False,
) -> ExtractionModel:
    """Gram-Schmidt functional reduction.

    At step ``j`` take the top eigenpair of ``Sigma_j``; stop when its value
    (clamped at 0) is at most ``epsilon**2``; otherwise substitute
    ``Z_j = X nu_j``, orthogonalize ``fam.frontier(j)`` and deflate.

    Parameters
    ----------
    ds : Dataset
        Centered data.
    fam : FunctionFamily
        Over ``d = ds.n_features`` variables.
    epsilon : float
        Stop threshold; compared squared.
    max_features : int, optional
        Cap on the number of directions.
    complete : bool
        Ignore the threshold and run all ``d`` steps, taking each direction
        in the orthogonal complement of the previous ones. This is the
        artificial continuation used to check the post-stop bound; with
        ``complete=False`` the directions agree with it up to rounding.

    Returns
    -------
    ExtractionModel
    """
    _check_inputs(ds, fam, epsilon)
    limit = ds.n_features if complete else _limit(ds, max_features)
    d = ds.n_features
    basis, moments = init(ds, fam, "covariance")
    eps2 = float(epsilon) ** 2
    directions: list[np.ndarray] = []
    variances: list[float] = []
    lam_trace: list[float] = []
    tr_trace: list[float] = []
    stop = EXHAUSTED
    rejected = None

    for j in range(1, d + 1):
        S = moments.sigma_matrix
        lam_trace.append(max(float(np.linalg.eigvalsh(S)[-1]), 0.0))
        tr_trace.append(float(np.trace(S)))
        if complete and directions:
            V = np.array(directions)
            P = np.eye(d) - V.T @ V
            pair = top_eigenpair((P @ S @ P + (P @ S @ P).T) / 2)
        else:
            pair = top_eigenpair(S)
        value = max(pair.value, 0.0)
        if not complete and value <= eps2:
            stop, rejected = THRESHOLD, pair.value
            break
        if len(directions) >= limit:
            stop = MAX_FEATURES
            break
        nu = pair.vector
        directions.append(nu)
        variances.append(float(nu @ S @ nu))
        extend(basis, moments, fam.frontier(j), nu, ds)
    else:
        S = moments.sigma_matrix
        lam_trace.append(max(float(np.linalg.eigvalsh(S)[-1]), 0.0))
        tr_trace.append(float(np.trace(S)))

    check_extraction_traces(lam_trace, tr_trace)
    return ExtractionModel(
        algo="gfr",
        directions=np.array(directions).reshape(-1, d),
        per_step_variance=np.array(variances),
        stop_reason=stop,
        epsilon=float(epsilon),
        family=fam,
        basis=basis,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        lambda_trace=np.array(lam_trace),
        trace_trace=np.array(tr_trace),
        rejected_variance=rejected,
    )


def gca(
    ds: Dataset,
    fam: FunctionFamily,
    epsilon: float,
    *,
    max_features: int | None = None,
    principal: list[EigenPair] | None = None,
) -> ExtractionModel:
    """Gram-Schmidt component analysis over the principal directions.

    At step ``j``: ``E_j = {i : rho_i^T Sigma_j rho_i < epsilon}`` (note:
    ``epsilon`` unsquared, strict inequality). Return when ``E_j`` holds
    every component; otherwise pick the component outside ``E_j`` with the
    largest variance of ``g_j(X) = X - sum_{i in E_j} rho_i rho_i^T X``
    (lowest index on ties), substitute ``Z = rho^T X`` and deflate.

    Parameters
    ----------
    ds : Dataset
        Centered data.
    fam : FunctionFamily
    epsilon : float
        Capture threshold, compared unsquared.
    max_features : int, optional
        Cap on the number of selected components.
    principal : list of EigenPair, optional
        Precomputed ``pca(ds)``.
    """
    _check_inputs(ds, fam, epsilon)
    limit = _limit(ds, max_features)
    d = ds.n_features
    pairs = principal if principal is not None else pca(ds)
    R = np.array([p.vector for p in pairs])
    values = np.array([p.value for p in pairs])
    X = ds.values
    basis, moments = init(ds, fam, "covariance")

    chosen: list[int] = []
    scores_at_pick: list[float] = []
    excluded: list[tuple[int, ...]] = []
    lam_trace: list[float] = []
    tr_trace: list[float] = []
    stop = EXHAUSTED

    for j in range(1, d + 1):
        S = moments.sigma_matrix
        lam_trace.append(max(float(np.linalg.eigvalsh(S)[-1]), 0.0))
        tr_trace.append(float(np.trace(S)))
        residual = np.einsum("ij,jk,ik->i", R, S, R)
        in_e = residual < epsilon
        excluded.append(tuple(int(i) for i in np.flatnonzero(in_e)))
        if in_e.all():
            stop = ALL_CAPTURED
            break
        if len(chosen) >= limit:
            stop = MAX_FEATURES
            break
        E = R[in_e]
        G = X - (X @ E.T) @ E
        Sbar = G.T @ G / ds.n_samples
        scores = np.einsum("ij,jk,ik->i", R, Sbar, R)
        free = ~in_e
        free[chosen] = False
        candidates = np.flatnonzero(free)
        if candidates.size == 0:
            stop = ALL_CAPTURED
            break
        pick = int(candidates[np.argmax(scores[candidates])])
        chosen.append(pick)
        scores_at_pick.append(float(scores[pick]))
        extend(basis, moments, fam.frontier(j), R[pick], ds)
    else:
        S = moments.sigma_matrix
        lam_trace.append(max(float(np.linalg.eigvalsh(S)[-1]), 0.0))
        tr_trace.append(float(np.trace(S)))
        excluded.append(tuple(int(i) for i in np.flatnonzero(
            np.einsum("ij,jk,ik->i", R, S, R) < epsilon)))

    check_distinct(chosen, "GCA components")
    check_extraction_traces(lam_trace, tr_trace)
    return ExtractionModel(
        algo="gca",
        directions=R[chosen].reshape(-1, d),
        per_step_variance=np.array(scores_at_pick),
        stop_reason=stop,
        epsilon=float(epsilon),
        family=fam,
        basis=basis,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        components=tuple(chosen),
        principal_values=values,
        principal_directions=R,
        lambda_trace=np.array(lam_trace),
        trace_trace=np.array(tr_trace),
        excluded=excluded,
    )


def pca_model(ds: Dataset, epsilon: float = 0.0, *, max_features: int | None = None) -> ExtractionModel:
    """PCA packaged as an extraction model.

    Keeps the leading directions whose eigenvalue exceeds ``epsilon**2``,
    the same stop rule GFR uses, so ``pca_model`` and GFR with the
    singleton family agree.
    """
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be a finite non-negative number, got {epsilon}")
    limit = _limit(ds, max_features)
    pairs = pca(ds)
    values = np.array([p.value for p in pairs])
    R = np.array([p.vector for p in pairs])
    keep = 0
    stop = EXHAUSTED
    for value in values:
        if max(value, 0.0) <= float(epsilon) ** 2:
            stop = THRESHOLD
            break
        if keep >= limit:
            stop = MAX_FEATURES
            break
        keep += 1
    tail = np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])
    lam = np.concatenate([np.maximum(values, 0.0), [0.0]])
    check_extraction_traces(lam[: keep + 1], tail[: keep + 1])
    return ExtractionModel(
        algo="pca",
        directions=R[:keep],
        per_step_variance=values[:keep].copy(),
        stop_reason=stop,
        epsilon=float(epsilon),
        family=build("singletons", ds.n_features),
        basis=None,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        principal_values=values,
        principal_directions=R,
        lambda_trace=lam[: keep + 1],
        trace_trace=tail[: keep + 1],
    )
