"""Synthetic datasets with planted nonlinear redundancies.

``n`` independent Gaussian variables are drawn with variances from
``Unif(variance_low, variance_high)``. Each of the remaining ``d - n``
variables is ``k_i`` times a product of distinct non-redundant variables,
optionally plus Gaussian noise ``delta_i``. The planted variables are
shuffled by a random permutation and, for ``target="components"``, mixed
by a random orthogonal matrix so the structure sits in the principal
components rather than in the raw features.

Random streams come from a counter-based Philox generator keyed by the
spec's seed. Each ingredient (variances, monomials, samples, noise,
permutation, mixing) has its own child stream, so changing one ingredient
never shifts the draws of another.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, save_csv
from .family import build, evaluate_many
from .orthogonalizer import NumericalError

__all__ = [
    "SynthSpec",
    "SynthResult",
    "Redundancy",
    "Score",
    "SynthError",
    "generate",
    "score",
    "epsilon_for",
    "decorrelate",
    "KAPPA",
    "export",
]

KAPPA = 0.9
STREAMS = ("variances", "monomials", "samples", "noise", "permutation", "mixing")


class SynthError(ValueError):
    """The requested synthetic configuration cannot be built."""


@dataclass(frozen=True)
class SynthSpec:
    """Configuration of one synthetic dataset.

    Parameters
    ----------
    d : int
        Total number of variables.
    n : int
        Number of non-redundant variables.
    degree : int or tuple of int
        Degree of each redundancy monomial. A tuple draws every monomial
        uniformly from the union over the listed degrees.
    noise_std : float
        Standard deviation of the additive noise ``delta_i``.
    seed : int or tuple of int
        Seed material for the Philox streams.
    N : int
        Number of samples.
    target : {"components", "features"}
    variance_low, variance_high : float, optional
        Range of the non-redundant variances. Defaults: ``high = n`` and
        ``low = 0`` without noise, ``2 * noise_std**2`` with noise (a
        non-redundant variable below the noise level would itself be a
        redundancy at that threshold).
    k_rule : {"footnote", "unit"}
        ``footnote`` scales each product so its variance is ``KAPPA**2``
        times the room left below its least variant factor; ``unit`` uses
        ``k_i = 1``.
    exact_components : bool
        ``components`` target only. Perturb the Gaussian draws minimally so
        the planted variables are exactly uncorrelated in the sample. Then
        the empirical principal directions are the mixing columns and the
        planted structure is exactly present in the principal components.
    shuffle : bool
        Apply the random permutation (``False`` keeps non-redundant first).
    """

    d: int
    n: int
    degree: int | tuple[int, ...] = 2
    noise_std: float = 0.0
    seed: int | tuple[int, ...] = 0
    N: int = 2000
    target: str = "components"
    variance_low: float | None = None
    variance_high: float | None = None
    k_rule: str = "footnote"
    exact_components: bool = True
    shuffle: bool = True

    @property
    def degrees(self) -> tuple[int, ...]:
        return (self.degree,) if isinstance(self.degree, int) else tuple(self.degree)

    @property
    def low(self) -> float:
        if self.variance_low is not None:
            return float(self.variance_low)
        return 2.0 * self.noise_std**2 if self.noise_std > 0 else 0.0

    @property
    def high(self) -> float:
        return float(self.n if self.variance_high is None else self.variance_high)

    def validate(self) -> None:
        if not 1 <= self.n < self.d:
            raise SynthError(f"need 1 <= n < d, got n={self.n}, d={self.d}")
        if self.N < 2:
            raise SynthError("N must be at least 2")
        if self.target not in ("components", "features"):
            raise SynthError(f"unknown target {self.target!r}")
        if self.k_rule not in ("footnote", "unit"):
            raise SynthError(f"unknown k_rule {self.k_rule!r}")
        if self.noise_std < 0:
            raise SynthError("noise_std must be non-negative")
        for deg in self.degrees:
            if deg < 2:
                raise SynthError(f"redundancy degree must be at least 2, got {deg}")
            if deg > self.n:
                raise SynthError(f"degree {deg} exceeds the {self.n} non-redundant variables")
        available = sum(comb(self.n, deg) for deg in set(self.degrees))
        if available < self.d - self.n:
            raise SynthError(
                f"only {available} distinct monomials for {self.d - self.n} redundancies"
            )
        if not 0 <= self.low < self.high:
            raise SynthError(f"bad variance range ({self.low}, {self.high})")


@dataclass(frozen=True)
class Redundancy:
    """One planted redundancy ``X_index = k * prod(X_factors) + delta``.

    ``index`` and ``factors`` are positions among the planted variables
    after the permutation (feature columns for ``target="features"``).
    """

    index: int
    factors: tuple[int, ...]
    k: float
    noise_variance: float


@dataclass
class SynthResult:
    """A generated dataset and its ground truth.

    Attributes
    ----------
    dataset : Dataset
        Raw (uncentered) observations.
    ground_truth : frozenset of int
        Non-redundant feature columns (``features``) or non-redundant
        principal-component indices, numbered by decreasing variance
        (``components``).
    redundancy_records : list of Redundancy
    planted : ndarray
        The planted variables, permuted, before mixing.
    mixing : ndarray or None
        Orthogonal ``Q`` with ``X = planted @ Q.T`` (components only).
    noise : ndarray or None
        Noise columns, one per redundancy in record order.
    """

    spec: SynthSpec
    dataset: Dataset
    ground_truth: frozenset
    redundancy_records: list[Redundancy]
    planted: np.ndarray
    mixing: np.ndarray | None = None
    noise: np.ndarray | None = None
    component_of: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class Score:
    success: bool
    missing: frozenset
    spurious: frozenset


def _streams(seed) -> dict[str, np.random.Generator]:
    material = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    children = np.random.SeedSequence([int(s) for s in material]).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.Philox(child))
            for name, child in zip(STREAMS, children)}


def _products(G: np.ndarray, sets: Sequence[tuple[int, ...]]) -> np.ndarray:
    return np.column_stack([np.prod(G[:, list(s)], axis=1) for s in sets])


def _moment_keys(n: int, monomials: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Distinct raw moments whose vanishing makes the planted variables uncorrelated.

    With centered base columns, ``cov(V_p, V_q) = E[V_p V_q]`` once every
    product has mean zero. Each constraint is keyed by the multiset of base
    factors, so identities such as ``E[a (bc)] = E[c (ab)]`` appear once.
    """
    sets = [(i,) for i in range(n)] + [tuple(s) for s in monomials]
    keys = [tuple(sorted(s)) for s in monomials]
    for p in range(len(sets)):
        for q in range(p + 1, len(sets)):
            keys.append(tuple(sorted(sets[p] + sets[q])))
    return list(dict.fromkeys(keys))


def decorrelate(
    G: np.ndarray,
    monomials: Sequence[tuple[int, ...]],
    *,
    tol: float = 1e-13,
    max_iter: int = 30,
    chunk: int = 256,
) -> np.ndarray:
    """Minimally perturb ``G`` so base columns and products are uncorrelated.

    The columns are centered, then Gauss-Newton with minimum-norm,
    mean-preserving steps drives to zero every distinct raw moment that
    equals a covariance between two planted variables
    ``V = [G, prod_S G_S for S in monomials]``.

    Parameters
    ----------
    G : ndarray, shape (N, n)
        Base Gaussian draws.
    monomials : sequence of tuple of int
        0-based factor sets of the products.
    tol : float
        Target for the largest absolute sample correlation among ``V``.

    Returns
    -------
    ndarray
        The perturbed, centered copy of ``G``.
    """
    G = np.array(G, dtype=float)
    G -= G.mean(axis=0)
    N, n = G.shape
    sets = [(i,) for i in range(n)] + [tuple(s) for s in monomials]
    keys = _moment_keys(n, monomials)
    # For each key and variable x in it: (x, multiplicity, remaining factors).
    parts = [
        [(x, key.count(x), key[:key.index(x)] + key[key.index(x) + 1:]) for x in set(key)]
        for key in keys
    ]
    iu, ju = np.triu_indices(len(sets), 1)
    for _ in range(max_iter):
        V = _products(G, sets)
        C = np.cov(V, rowvar=False, bias=True)
        sd = np.sqrt(np.diag(C))
        if np.max(np.abs(C[iu, ju]) / (sd[iu] * sd[ju])) < tol:
            return G
        resid = np.array([np.mean(np.prod(G[:, list(k)], axis=1)) for k in keys])
        offsets = [
            [(x, c * np.mean(np.prod(G[:, list(rest)], axis=1)) if rest else c)
             for x, c, rest in kp]
            for kp in parts
        ]
        blocks = []
        JJt = np.zeros((len(keys), len(keys)))
        for start in range(0, N, chunk):
            rows = slice(start, min(N, start + chunk))
            Gr = G[rows]
            J = np.zeros((len(keys), Gr.shape[0], n))
            for k, (kp, off) in enumerate(zip(parts, offsets)):
                for (x, c, rest), (_, mean) in zip(kp, off):
                    col = c * np.prod(Gr[:, list(rest)], axis=1) if rest else c
                    J[k, :, x] = (col - mean) / N
            J = J.reshape(len(keys), -1)
            JJt += J @ J.T
            blocks.append((rows, J))
        y = np.linalg.lstsq(JJt, resid, rcond=None)[0]
        for rows, J in blocks:
            G[rows] -= (J.T @ y).reshape(rows.stop - rows.start, n)
    raise NumericalError("exact decorrelation did not converge")


def _orthogonal_noise(D: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Make noise columns orthogonal to ``[1, V]`` and to each other.

    Column norms of the original draws are kept.
    """
    N = D.shape[0]
    M = np.column_stack([np.ones(N), V])
    coef, *_ = np.linalg.lstsq(M, D, rcond=None)
    R = D - M @ coef
    w, U = np.linalg.eigh(R.T @ R)
    inv_sqrt = U @ np.diag(1.0 / np.sqrt(w)) @ U.T
    return (R @ inv_sqrt) * np.linalg.norm(D, axis=0)


def _haar_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def generate(spec: SynthSpec) -> SynthResult:
    """Build a dataset with planted redundancies; deterministic in the seed."""
    spec.validate()
    rng = _streams(spec.seed)
    n, d, N = spec.n, spec.d, spec.N
    t = d - n

    variances = rng["variances"].uniform(spec.low, spec.high, size=n)
    pool = [c for deg in spec.degrees for c in itertools.combinations(range(n), deg)]
    picks = rng["monomials"].choice(len(pool), size=t, replace=False)
    monomials = [pool[i] for i in picks]

    G = rng["samples"].standard_normal((N, n)) * np.sqrt(variances)
    exact = spec.target == "components" and spec.exact_components
    if exact:
        G = decorrelate(G, monomials)
    prods = _products(G, monomials)

    noise = None
    if spec.noise_std > 0:
        noise = rng["noise"].standard_normal((N, t)) * spec.noise_std
        if exact:
            noise = _orthogonal_noise(noise, np.column_stack([G, prods]))

    base_var = G.var(axis=0)
    ks = np.ones(t)
    noise_var = np.zeros(t) if noise is None else noise.var(axis=0)
    redundant = np.empty((N, t))
    for i, s in enumerate(monomials):
        if spec.k_rule == "footnote":
            room = base_var[list(s)].min() - noise_var[i]
            if room <= 0:
                raise SynthError(
                    "noise variance exceeds a factor's variance; raise variance_low"
                )
            ks[i] = KAPPA * np.sqrt(room / prods[:, i].var())
        redundant[:, i] = ks[i] * prods[:, i]
        if noise is not None:
            redundant[:, i] += noise[:, i]

    planted = np.column_stack([G, redundant])
    perm = rng["permutation"].permutation(d) if spec.shuffle else np.arange(d)
    planted = planted[:, perm]
    position = np.empty(d, dtype=int)
    position[perm] = np.arange(d)

    records = [
        Redundancy(
            index=int(position[n + i]),
            factors=tuple(int(position[f]) for f in s),
            k=float(ks[i]),
            noise_variance=float(noise_var[i]),
        )
        for i, s in enumerate(monomials)
    ]

    mixing = None
    component_of = None
    if spec.target == "components":
        mixing = _haar_orthogonal(rng["mixing"], d)
        values = planted @ mixing.T
        order = np.argsort(-planted.var(axis=0), kind="stable")
        component_of = np.empty(d, dtype=int)
        component_of[order] = np.arange(d)
        truth = frozenset(int(component_of[position[i]]) for i in range(n))
    else:
        values = planted
        truth = frozenset(int(position[i]) for i in range(n))

    return SynthResult(
        spec=spec,
        dataset=Dataset(values),
        ground_truth=truth,
        redundancy_records=records,
        planted=planted,
        mixing=mixing,
        noise=noise,
        component_of=component_of,
    )


def score(result: SynthResult, output_indices) -> Score:
    """Exact set match against the ground truth, ignoring order."""
    out = frozenset(int(i) for i in output_indices)
    truth = result.ground_truth
    return Score(out == truth, truth - out, out - truth)


def epsilon_for(result: SynthResult, mode: str | None = None, *, family_degree: int = 3) -> float:
    """Scenario threshold for GCA/GFA.

    Parameters
    ----------
    mode : {"constant", "noise", "mismatch"}, optional
        ``constant`` is ``1e-4``. ``noise`` is the largest empirical
        variance among the drawn ``delta_i``, so every noisy redundancy is
        an epsilon-redundancy. ``mismatch`` is the largest mean-square
        residual of a redundant variable projected on the multilinear span
        (degree ``family_degree``, with constant) of its own factors.
        ``None`` infers the mode from ``result.spec`` (noise level, degrees).
    """
    spec = result.spec
    if mode is None:
        if spec.noise_std > 0:
            mode = "noise"
        elif max(spec.degrees) > family_degree:
            mode = "mismatch"
        else:
            mode = "constant"
    if mode == "constant":
        return 1e-4
    if mode == "noise":
        if result.noise is None:
            raise SynthError("dataset has no noise")
        return float(np.max(result.noise.var(axis=0)))
    if mode == "mismatch":
        worst = 0.0
        for rec in result.redundancy_records:
            Z = result.planted[:, list(rec.factors)]
            fam = build("multilinear", len(rec.factors), family_degree)
            F = evaluate_many(fam.members(), Z)
            y = result.planted[:, rec.index]
            coef, *_ = np.linalg.lstsq(F, y, rcond=None)
            worst = max(worst, float(np.mean((y - F @ coef) ** 2)))
        return worst
    raise SynthError(f"unknown epsilon mode {mode!r}")


def export(result: SynthResult, csv_path: str | Path) -> Path:
    """Write the dataset as CSV and its ground truth as a JSON sidecar.

    Returns the sidecar path, ``csv_path`` with suffix ``.truth.json``.
    """
    csv_path = Path(csv_path)
    save_csv(csv_path, result.dataset.values, result.dataset.column_names)
    spec = result.spec
    sidecar = csv_path.with_suffix(".truth.json")
    payload = {
        "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
        "target": spec.target,
        "ground_truth": sorted(result.ground_truth),
        "redundancies": [
            {"index": r.index, "factors": list(r.factors), "k": r.k,
             "noise_variance": r.noise_variance}
            for r in result.redundancy_records
        ],
        "mixing": None if result.mixing is None else result.mixing.tolist(),
    }
    sidecar.write_text(json.dumps(payload, indent=1) + "\n")
    return sidecar
