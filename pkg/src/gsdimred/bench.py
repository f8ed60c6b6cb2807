"""Synthetic benchmark scenarios: success-rate tables and the UFFS comparison."""

from __future__ import annotations

import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import center, standardize
from .extract import gca
from .family import build
from .select import gfa, gfs, uffs
from .synth import SynthSpec, epsilon_for, generate, score

__all__ = [
    "SCENARIOS",
    "Trial",
    "SizeResult",
    "run_trial",
    "run_scenario",
    "thread_cap",
    "UFFS_RECIPE",
]

# name -> (algorithm, target, epsilon mode, noise std)
SCENARIOS = {
    "gca1": ("gca", "components", "constant", 0.0),
    "gca2": ("gca", "components", "noise", float(np.sqrt(0.1))),
    "gca3": ("gca", "components", "mismatch", 0.0),
    "gfa1": ("gfa", "features", "constant", 0.0),
    "gfa2": ("gfa", "features", "noise", float(np.sqrt(0.1))),
    "gfa3": ("gfa", "features", "mismatch", 0.0),
    "uffs-compare": ("uffs-compare", "features", None, 0.0),
}

# Dataset recipe of the GFS/UFFS comparison.
UFFS_RECIPE = dict(
    d=30, n=15, degree=(2, 3), N=1000, variance_low=0.5, variance_high=1.0, k_rule="unit"
)
UFFS_FAMILY_DEGREE = 3
UFFS_EPSILON = 0.1


@dataclass
class Trial:
    success: bool
    n_selected: int
    missing: int = 0
    spurious: int = 0
    epsilon: float = 0.0
    t_gfs: float | None = None
    t_uffs: float | None = None
    n_uffs: int | None = None


@dataclass
class SizeResult:
    scenario: str
    N: int
    trials: list[Trial] = field(default_factory=list)

    @property
    def successes(self) -> int:
        return sum(t.success for t in self.trials)

    @property
    def rate(self) -> float:
        return self.successes / len(self.trials) if self.trials else float("nan")

    def ratio_median(self) -> float:
        r = [t.t_uffs / t.t_gfs for t in self.trials if t.t_gfs]
        return float(np.median(r)) if r else float("nan")

    def histogram(self, which: str = "gfs") -> dict[int, int]:
        key = (lambda t: t.n_selected) if which == "gfs" else (lambda t: t.n_uffs)
        return dict(sorted(Counter(key(t) for t in self.trials).items()))


def thread_cap() -> int:
    """Worker count: ``GS_DIMRED_THREADS`` if set, else the CPU count."""
    raw = os.environ.get("GS_DIMRED_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"GS_DIMRED_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def trial_seed(seed: int, N: int, trial: int) -> tuple[int, int, int]:
    return (int(seed), int(N), int(trial))


def run_trial(
    scenario: str,
    d: int,
    n: int,
    degree,
    N: int,
    seed,
    family_degree: int | None = None,
    standardized: bool = False,
) -> Trial:
    """Generate one dataset, fit, and score."""
    algo, target, mode, noise = SCENARIOS[scenario]
    if algo == "uffs-compare":
        return _uffs_trial(seed, N, standardized)
    degrees = degree if isinstance(degree, tuple) else (degree,)
    fam_degree = family_degree or (3 if mode == "mismatch" else max(degrees))
    spec = SynthSpec(d=d, n=n, degree=degree, noise_std=noise, seed=seed, N=N, target=target)
    result = generate(spec)
    eps = epsilon_for(result, mode, family_degree=fam_degree)
    ds = center(result.dataset)
    fam = build("multilinear", d, fam_degree)
    if algo == "gca":
        out = gca(ds, fam, eps).components
    else:
        out = gfa(ds, fam, eps).selected
    sc = score(result, out)
    return Trial(sc.success, len(out), len(sc.missing), len(sc.spurious), eps)


def _uffs_trial(seed, N: int, standardized: bool) -> Trial:
    recipe = dict(UFFS_RECIPE, N=N)
    result = generate(SynthSpec(seed=seed, target="features", **recipe))
    ds = standardize(result.dataset) if standardized else center(result.dataset)
    fam = build("multilinear", ds.n_features, UFFS_FAMILY_DEGREE)
    t0 = time.perf_counter()
    g = gfs(ds, fam, UFFS_EPSILON)
    t1 = time.perf_counter()
    u = uffs(ds, UFFS_FAMILY_DEGREE, UFFS_EPSILON)
    t2 = time.perf_counter()
    sc = score(result, g.selected)
    return Trial(sc.success, len(g.selected), len(sc.missing), len(sc.spurious),
                 UFFS_EPSILON, t1 - t0, t2 - t1, len(u.selected))


def _run(args):
    return run_trial(*args)


def run_scenario(
    scenario: str,
    *,
    d: int = 30,
    n: int = 15,
    degree=2,
    sizes=(2000,),
    trials: int = 10,
    seed: int = 0,
    family_degree: int | None = None,
    standardized: bool = False,
    workers: int | None = None,
) -> list[SizeResult]:
    """Run ``trials`` independent trials per sample size.

    Trial ``t`` at size ``N`` uses seed ``(seed, N, t)``, so results do not
    depend on the worker count. The UFFS comparison always runs serially
    because it measures wall-clock time.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if trials < 0:
        raise ValueError("trials must be non-negative")
    jobs = [
        (scenario, d, n, degree, N, trial_seed(seed, N, t), family_degree, standardized)
        for N in sizes
        for t in range(trials)
    ]
    workers = thread_cap() if workers is None else max(1, workers)
    if scenario == "uffs-compare" or workers == 1 or len(jobs) <= 1:
        outcomes = [_run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_run, jobs))
    results = []
    for i, N in enumerate(sizes):
        results.append(SizeResult(scenario, int(N), outcomes[i * trials:(i + 1) * trials]))
    return results
