import itertools
import json

import numpy as np
import pytest

from gsdimred.dataset import center, load_csv
from gsdimred.extract import gca
from gsdimred.family import build
from gsdimred.synth import (
    KAPPA,
    SynthError,
    SynthSpec,
    decorrelate,
    epsilon_for,
    export,
    generate,
    score,
)


def corr_offdiag(V):
    C = np.corrcoef(V, rowvar=False)
    return np.max(np.abs(C - np.diag(np.diag(C))))


class TestGenerate:
    def test_table_cell_recovered_by_gca(self):
        result = generate(SynthSpec(d=30, n=15, degree=2, seed=101, N=2000))
        assert len(result.ground_truth) == 15
        model = gca(center(result.dataset), build("multilinear", 30, 2), epsilon_for(result))
        assert score(result, model.components).success

    def test_three_feature_footnote(self):
        result = generate(SynthSpec(d=3, n=2, degree=2, N=10_000, target="features", seed=4))
        (rec,) = result.redundancy_records
        X = result.dataset.values
        f = list(rec.factors)
        np.testing.assert_allclose(X[:, rec.index], rec.k * np.prod(X[:, f], axis=1))
        v = X.var(axis=0)
        assert v[rec.index] < v[f].min()
        expect_k = KAPPA * np.sqrt(v[f].min() / np.prod(X[:, f], axis=1).var())
        assert rec.k == pytest.approx(expect_k, rel=1e-12)

    @pytest.mark.parametrize("target", ["components", "features"])
    def test_deterministic(self, target):
        spec = SynthSpec(d=8, n=5, degree=2, seed=(3, 9), N=300, target=target, noise_std=0.1)
        a, b = generate(spec), generate(spec)
        assert a.dataset.values.tobytes() == b.dataset.values.tobytes()
        assert a.ground_truth == b.ground_truth

    def test_seed_changes_data(self):
        a = generate(SynthSpec(d=6, n=3, seed=1, N=100))
        b = generate(SynthSpec(d=6, n=3, seed=2, N=100))
        assert not np.array_equal(a.dataset.values, b.dataset.values)

    @pytest.mark.parametrize("target, noise", [("features", 0.0), ("components", 0.0),
                                               ("features", 0.3), ("components", 0.3)])
    def test_least_variance_and_independence(self, target, noise):
        spec = SynthSpec(d=20, n=10, degree=(2, 3), seed=7, N=2000, target=target,
                         noise_std=noise)
        result = generate(spec)
        P = result.planted
        v = P.var(axis=0)
        for rec in result.redundancy_records:
            assert v[rec.index] < v[list(rec.factors)].min()
        base = sorted(set(range(20)) - {r.index for r in result.redundancy_records})
        assert corr_offdiag(P[:, base]) <= 5 / np.sqrt(spec.N)

    def test_components_mixing_is_orthogonal(self):
        result = generate(SynthSpec(d=10, n=5, seed=3, N=500))
        Q = result.mixing
        np.testing.assert_allclose(Q @ Q.T, np.eye(10), atol=1e-12)
        np.testing.assert_allclose(result.dataset.values, result.planted @ Q.T)

    def test_exact_components_are_uncorrelated(self):
        result = generate(SynthSpec(d=12, n=6, seed=5, N=800))
        assert corr_offdiag(result.planted) < 1e-12

    def test_ground_truth_in_variance_order(self):
        result = generate(SynthSpec(d=10, n=5, seed=8, N=1000))
        order = np.argsort(-result.planted.var(axis=0), kind="stable")
        base = set(range(10)) - {r.index for r in result.redundancy_records}
        assert result.ground_truth == frozenset(int(np.flatnonzero(order == i)[0]) for i in base)

    @pytest.mark.parametrize("kwargs", [
        dict(d=5, n=2, degree=3),
        dict(d=5, n=5),
        dict(d=5, n=3, degree=1),
        dict(d=10, n=3, degree=2),
        dict(d=5, n=3, target="labels"),
        dict(d=5, n=3, variance_low=2.0, variance_high=1.0),
    ])
    def test_infeasible(self, kwargs):
        with pytest.raises(SynthError):
            generate(SynthSpec(seed=0, N=50, **kwargs))

    def test_unit_k_rule(self):
        result = generate(SynthSpec(d=6, n=3, seed=1, N=100, k_rule="unit", target="features"))
        assert all(r.k == 1.0 for r in result.redundancy_records)


class TestScore:
    def setup_method(self):
        self.result = generate(SynthSpec(d=6, n=3, seed=0, N=100, target="features"))
        self.truth = sorted(self.result.ground_truth)

    def test_exact(self):
        assert score(self.result, self.truth[::-1]).success

    def test_missing(self):
        s = score(self.result, self.truth[1:])
        assert not s.success and len(s.missing) == 1 and not s.spurious

    def test_spurious(self):
        extra = next(i for i in range(6) if i not in self.truth)
        s = score(self.result, self.truth + [extra])
        assert not s.success and s.spurious == {extra} and not s.missing


class TestEpsilon:
    def test_constant(self):
        assert epsilon_for(generate(SynthSpec(d=6, n=3, seed=0, N=100))) == 1e-4

    def test_noise(self):
        result = generate(SynthSpec(d=30, n=15, seed=0, N=2000, noise_std=0.316))
        eps = epsilon_for(result)
        assert eps == pytest.approx(np.max(result.noise.var(axis=0)))
        assert eps == pytest.approx(0.1, rel=0.15)

    def test_mismatch(self):
        result = generate(SynthSpec(d=8, n=5, degree=4, seed=2, N=500))
        eps = epsilon_for(result, "mismatch", family_degree=3)
        worst = 0.0
        for rec in result.redundancy_records:
            F = result.planted[:, list(rec.factors)]
            k = F.shape[1]
            cols = [np.ones(len(F))]
            for r in range(1, 4):
                for S in itertools.combinations(range(k), r):
                    cols.append(np.prod(F[:, list(S)], axis=1))
            A = np.column_stack(cols)
            y = result.planted[:, rec.index]
            resid = y - A @ np.linalg.lstsq(A, y, rcond=None)[0]
            worst = max(worst, np.mean(resid**2))
        assert eps == pytest.approx(worst, rel=1e-8)

    def test_unknown_mode(self):
        with pytest.raises(SynthError):
            epsilon_for(generate(SynthSpec(d=6, n=3, seed=0, N=100)), "median")


def test_decorrelate_converges(rng):
    G = rng.normal(size=(400, 4))
    out = decorrelate(G, [(0, 1), (1, 2, 3)])
    V = np.column_stack([out, out[:, 0] * out[:, 1], out[:, 1] * out[:, 2] * out[:, 3]])
    assert corr_offdiag(V) < 1e-12
    assert np.linalg.norm(out - G) / np.linalg.norm(G) < 0.2


def test_export(tmp_path):
    result = generate(SynthSpec(d=6, n=3, seed=0, N=50))
    sidecar = export(result, tmp_path / "data.csv")
    ds = load_csv(tmp_path / "data.csv")
    np.testing.assert_array_equal(ds.values, result.dataset.values)
    payload = json.loads(sidecar.read_text())
    assert payload["ground_truth"] == sorted(result.ground_truth)
    assert len(payload["redundancies"]) == 3
