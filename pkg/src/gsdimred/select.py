"""Feature selection: GFS, GFA and the UFFS reference."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .dataset import Dataset, Preprocessing
from .family import FunctionFamily, Monomial, build, evaluate
from .invariants import check_distinct, check_sigma_trace
from .orthogonalizer import OrthoBasis, extend, init

__all__ = ["SelectionModel", "gfs", "gfa", "uffs", "uffs_characters", "MAX_CHARACTERS"]

MAX_CHARACTERS = 200_000

THRESHOLD = "threshold"
EXHAUSTED = "exhausted_d"
ALL_CAPTURED = "all_captured"
MAX_FEATURES = "max_features"


@dataclass
class SelectionModel:
    """Result of a feature-selection fit.

    Attributes
    ----------
    algo : {"gfs", "gfa", "uffs"}
    selected : tuple of int
        0-based feature indices in selection order (index order for UFFS,
        decreasing Fourier norm in its ranking mode).
    per_step_sigma : ndarray
        GFS: ``||sigma_j||_inf`` at each accepted step. GFA: ``sigma_{j,s_j}``
        at selection. UFFS: ``||psi_j||^2`` of each selected feature.
    stop_reason : str
    epsilon : float
    family : FunctionFamily or None
    basis : OrthoBasis or None
    sigma_trace : ndarray, shape (steps, d)
        ``sigma_j`` for each evaluated step.
    excluded : list of tuple of int
        GFA only: ``E_j`` at each evaluated step.
    fourier_norms : ndarray or None
        UFFS only: ``||psi_j||`` for every feature.
    """

    algo: str
    selected: tuple[int, ...]
    per_step_sigma: np.ndarray
    stop_reason: str
    epsilon: float
    family: FunctionFamily | None
    basis: OrthoBasis | None
    n_features: int
    preprocessing: Preprocessing = field(default_factory=Preprocessing)
    column_names: tuple[str, ...] = ()
    sigma_trace: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    excluded: list[tuple[int, ...]] = field(default_factory=list)
    fourier_norms: np.ndarray | None = None
    argmax_rule: str | None = None

    @property
    def n_components(self) -> int:
        return len(self.selected)

    @property
    def selected_names(self) -> list[str]:
        return [self.column_names[i] for i in self.selected]

    def transform(self, rows: np.ndarray) -> np.ndarray:
        from .orthogonalizer import transform

        return transform(self, rows)


def _check(ds: Dataset, fam: FunctionFamily | None, epsilon: float, positive: bool) -> None:
    if fam is not None and fam.d != ds.n_features:
        raise ValueError(f"family has d={fam.d}, dataset has {ds.n_features} features")
    if not np.isfinite(epsilon) or epsilon < 0 or (positive and epsilon == 0):
        bound = "positive" if positive else "non-negative"
        raise ValueError(f"epsilon must be a finite {bound} number, got {epsilon}")


def _limit(d: int, max_features: int | None) -> int:
    if max_features is None:
        return d
    if max_features < 0:
        raise ValueError("max_features must be non-negative")
    return min(d, int(max_features))


def gfs(
    ds: Dataset,
    fam: FunctionFamily,
    epsilon: float,
    *,
    max_features: int | None = None,
    complete: bool = False,
) -> SelectionModel:
    """Gram-Schmidt functional selection.

    At step ``j`` stop when ``max_i sigma_{j,i} <= epsilon**2``; otherwise
    select ``s_j = argmax_i sigma_{j,i}`` (lowest index on ties), substitute
    ``Z_j = X_{s_j}``, orthogonalize ``fam.frontier(j)`` and deflate.

    Parameters
    ----------
    ds : Dataset
        Centered (or standardized) data.
    fam : FunctionFamily
    epsilon : float
        Stop threshold; compared squared.
    max_features : int, optional
    complete : bool
        Ignore the threshold and keep selecting until every feature is
        used; the artificial continuation behind the post-stop bound.

    Notes
    -----
    Already-selected features are excluded from the argmax. Their residual
    variance is zero in exact arithmetic, so this only matters when
    rounding noise exceeds the remaining variances.
    """
    _check(ds, fam, epsilon, positive=False)
    d = ds.n_features
    limit = d if complete else _limit(d, max_features)
    basis, moments = init(ds, fam, "variance")
    eps2 = float(epsilon) ** 2
    chosen: list[int] = []
    tops: list[float] = []
    trace: list[np.ndarray] = []
    stop = EXHAUSTED
    free = np.ones(d, dtype=bool)

    for j in range(1, d + 1):
        sigma = moments.sigma_vector
        trace.append(sigma.copy())
        top = float(np.max(sigma))
        if not complete and top <= eps2:
            stop = THRESHOLD
            break
        if len(chosen) >= limit:
            stop = MAX_FEATURES
            break
        candidates = np.flatnonzero(free)
        pick = int(candidates[np.argmax(sigma[candidates])])
        chosen.append(pick)
        tops.append(float(sigma[pick]))
        free[pick] = False
        extend(basis, moments, fam.frontier(j), pick, ds)
    else:
        trace.append(moments.sigma_vector.copy())

    check_distinct(chosen)
    check_sigma_trace(trace)
    return SelectionModel(
        algo="gfs",
        selected=tuple(chosen),
        per_step_sigma=np.array(tops),
        stop_reason=stop,
        epsilon=float(epsilon),
        family=fam,
        basis=basis,
        n_features=d,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        sigma_trace=np.array(trace),
    )


def gfa(
    ds: Dataset,
    fam: FunctionFamily,
    epsilon: float,
    *,
    argmax: str = "original",
    max_features: int | None = None,
) -> SelectionModel:
    """Gram-Schmidt feature analysis (component analysis on the standard basis).

    At step ``j``: ``E_j = {i : sigma_{j,i} < epsilon}`` (unsquared, strict).
    Return when ``E_j`` covers every feature; otherwise select the feature
    outside ``E_j`` maximizing the original variance ``sigma_{1,i}``
    (``argmax="original"``) or the current residual ``sigma_{j,i}``
    (``argmax="current"``), lowest index on ties.
    """
    _check(ds, fam, epsilon, positive=False)
    if argmax not in ("original", "current"):
        raise ValueError(f"argmax must be 'original' or 'current', got {argmax!r}")
    d = ds.n_features
    limit = _limit(d, max_features)
    basis, moments = init(ds, fam, "variance")
    sigma1 = moments.sigma_vector.copy()
    chosen: list[int] = []
    at_pick: list[float] = []
    trace: list[np.ndarray] = []
    excluded: list[tuple[int, ...]] = []
    stop = EXHAUSTED
    free = np.ones(d, dtype=bool)

    for j in range(1, d + 1):
        sigma = moments.sigma_vector
        trace.append(sigma.copy())
        in_e = sigma < epsilon
        excluded.append(tuple(int(i) for i in np.flatnonzero(in_e)))
        if in_e.all():
            stop = ALL_CAPTURED
            break
        if len(chosen) >= limit:
            stop = MAX_FEATURES
            break
        candidates = np.flatnonzero(~in_e & free)
        if candidates.size == 0:
            stop = ALL_CAPTURED
            break
        key = sigma1 if argmax == "original" else sigma
        pick = int(candidates[np.argmax(key[candidates])])
        chosen.append(pick)
        at_pick.append(float(sigma[pick]))
        free[pick] = False
        extend(basis, moments, fam.frontier(j), pick, ds)
    else:
        sigma = moments.sigma_vector
        trace.append(sigma.copy())
        excluded.append(tuple(int(i) for i in np.flatnonzero(sigma < epsilon)))

    check_distinct(chosen)
    check_sigma_trace(trace)
    return SelectionModel(
        algo="gfa",
        selected=tuple(chosen),
        per_step_sigma=np.array(at_pick),
        stop_reason=stop,
        epsilon=float(epsilon),
        family=fam,
        basis=basis,
        n_features=d,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        sigma_trace=np.array(trace),
        excluded=excluded,
        argmax_rule=argmax,
    )


def uffs_characters(d: int, max_degree: int) -> list[tuple[int, ...]]:
    """Multilinear characters of degree at most ``max_degree`` in UFFS order.

    Sets are 1-based and ordered by their binary code ``sum 2**(s-1)``:
    ``(), (1,), (2,), (1, 2), (3,), (1, 3), (2, 3), (1, 2, 3), ...``.
    """
    count = sum(comb(d, i) for i in range(min(d, max_degree) + 1))
    if count > MAX_CHARACTERS:
        raise ValueError(
            f"{count} characters exceed the enumeration guard of {MAX_CHARACTERS}"
        )
    import itertools

    out: list[tuple[int, ...]] = [()]
    for j in range(1, d + 1):
        heads = [
            rest
            for k in range(min(max_degree, j))
            for rest in itertools.combinations(range(1, j), k)
        ]
        heads.sort(key=lambda t: sum(1 << (s - 1) for s in t))
        out.extend(rest + (j,) for rest in heads)
    return out


def uffs(
    ds: Dataset,
    max_degree: int,
    epsilon: float,
    *,
    ranking: bool = False,
    n_select: int | None = None,
) -> SelectionModel:
    """Unsupervised Fourier feature selection, all characters at once.

    Every multilinear character up to ``max_degree`` is evaluated first,
    then orthogonalized in UFFS order. The Fourier norm of feature ``j`` is
    the residual norm of its singleton character. Features with norm above
    ``epsilon`` are returned in index order.

    Parameters
    ----------
    ranking : bool
        Return features by decreasing Fourier norm instead of index order.
    n_select : int, optional
        With ``ranking``, keep exactly this many top-ranked features rather
        than thresholding.
    """
    _check(ds, None, epsilon, positive=False)
    if max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    d = ds.n_features
    sets = uffs_characters(d, max_degree)
    X = ds.values
    monomials = [Monomial.of(*s) for s in sets]
    raw = np.empty((ds.n_samples, len(sets)))
    for k, m in enumerate(monomials):
        raw[:, k] = evaluate(m, X)

    basis = OrthoBasis(ds.n_samples, track_coefficients=False)
    norms = np.zeros(d)
    for k, m in enumerate(monomials):
        f = basis.absorb(m, raw[:, k])
        if len(sets[k]) == 1:
            j = sets[k][0] - 1
            norms[j] = basis.norms[-1] if f is not None else np.sqrt(max(basis.last_norm2, 0.0))

    if ranking:
        order = sorted(range(d), key=lambda i: (-norms[i], i))
        if n_select is not None:
            chosen = order[: max(0, int(n_select))]
        else:
            chosen = [i for i in order if norms[i] > epsilon]
    else:
        chosen = [i for i in range(d) if norms[i] > epsilon]
    check_distinct(chosen)

    return SelectionModel(
        algo="uffs",
        selected=tuple(chosen),
        per_step_sigma=norms[chosen] ** 2,
        stop_reason=EXHAUSTED,
        epsilon=float(epsilon),
        family=build("multilinear", d, max_degree),
        basis=basis,
        n_features=d,
        preprocessing=ds.preprocessing,
        column_names=ds.column_names,
        fourier_norms=norms,
    )
