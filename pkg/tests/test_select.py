import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import hypercube_enumerate

from gsdimred.dataset import Dataset, center
from gsdimred.family import build
from gsdimred.select import gfa, gfs, uffs, uffs_characters


def cube(d, defs=None):
    return Dataset(hypercube_enumerate(d, defs))


class TestGFS:
    def test_duplicated_column(self):
        H = hypercube_enumerate(2)
        X = np.column_stack([H[:, 0], H[:, 0], np.sqrt(0.5) * H[:, 1]])
        model = gfs(Dataset(X), build("singletons", 3), np.sqrt(0.1))
        assert model.selected == (0, 2)
        assert model.stop_reason == "threshold"
        assert abs(model.sigma_trace[1, 1]) <= 1e-12

    def test_product_feature(self):
        model = gfs(cube(2, [(1,), (2,), (1, 2)]), build("multilinear", 3, 2), np.sqrt(0.5))
        assert model.selected == (0, 1)
        np.testing.assert_allclose(model.sigma_trace[-1], 0.0, atol=1e-12)

    def test_threshold_above_all(self, rng):
        ds = center(Dataset(rng.normal(size=(50, 3))))
        model = gfs(ds, build("multilinear", 3, 2), 10.0)
        assert model.selected == () and model.stop_reason == "threshold"

    def test_frozen_sigma_trajectory(self):
        # sigma_1 = (2.8, 1.2, 0.9); E[X1 X2] = 0 and E[X1 X3] = -1.2, so after
        # X1 the third entry is 0.9 - 1.2**2 / 2.8 = 27/70.
        X = np.array([[1.0, 2.0, 0.5], [2.0, -1.0, -1.0], [-3.0, 0.0, 1.5],
                      [0.0, -1.0, -1.0], [0.0, 0.0, 0.0]])
        model = gfs(Dataset(X), build("singletons", 3), 0.0, max_features=1)
        np.testing.assert_allclose(model.sigma_trace[0], [2.8, 1.2, 0.9], atol=1e-14)
        np.testing.assert_allclose(model.sigma_trace[1], [0.0, 1.2, 27 / 70], atol=1e-12)

    def test_zero_residual_on_selected(self, rng):
        ds = center(Dataset(rng.normal(size=(300, 6))))
        model = gfs(ds, build("multilinear", 6, 2), 0.2)
        for j, s in enumerate(model.selected):
            assert model.sigma_trace[j + 1, s] <= 1e-8

    def test_post_termination_bound(self, rng):
        X = rng.normal(size=(300, 6))
        X[:, 5] = X[:, 0] * X[:, 1] + 0.05 * rng.normal(size=300)
        ds = center(Dataset(X))
        fam = build("multilinear", 6, 2)
        eps = 0.6
        short = gfs(ds, fam, eps)
        full = gfs(ds, fam, eps, complete=True)
        m = short.n_components
        assert full.selected[:m] == short.selected
        assert np.max(full.sigma_trace[m:]) <= eps**2 + 1e-8

    def test_distinct(self, rng):
        ds = center(Dataset(rng.normal(size=(100, 5))))
        model = gfs(ds, build("multilinear", 5, 3), 0.0)
        assert sorted(model.selected) == list(range(5))


class TestGFA:
    def test_product_of_two_gaussians(self):
        rng = np.random.default_rng(8)
        G = rng.standard_normal((10_000, 2)) * np.sqrt([0.9, 0.8])
        X = np.column_stack([G, G[:, 0] * G[:, 1]])
        ds = center(Dataset(X))
        v = ds.values.var(axis=0)
        assert v[0] > v[1] > v[2]
        model = gfa(ds, build("multilinear", 3, 2), 1e-4)
        assert set(model.selected) == {0, 1}
        assert model.stop_reason == "all_captured"

    def test_all_below_epsilon(self, rng):
        ds = center(Dataset(0.01 * rng.normal(size=(40, 3))))
        model = gfa(ds, build("multilinear", 3, 2), 1.0)
        assert model.selected == () and model.excluded[0] == (0, 1, 2)

    def test_argmax_rules(self):
        # sigma_1 = (2.8, 1.2, 0.9); after X1 the residuals are (0, 1.2, 27/70).
        X = np.array([[1.0, 2.0, 0.5], [2.0, -1.0, -1.0], [-3.0, 0.0, 1.5],
                      [0.0, -1.0, -1.0], [0.0, 0.0, 0.0]])
        ds = Dataset(X)
        a = gfa(ds, build("singletons", 3), 1e-9, argmax="original")
        b = gfa(ds, build("singletons", 3), 1e-9, argmax="current")
        assert a.selected[0] == b.selected[0] == 0
        assert a.argmax_rule == "original" and b.argmax_rule == "current"
        with pytest.raises(ValueError):
            gfa(ds, build("singletons", 3), 0.1, argmax="largest")

    def test_original_vs_current_can_differ(self):
        # X3 is mostly X1, so after selecting X1 its residual drops below X2's
        # residual even though its original variance is larger.
        rng = np.random.default_rng(9)
        x1 = rng.normal(size=5000) * 2.0
        x2 = rng.normal(size=5000) * 1.0
        x3 = 0.9 * x1 + 0.3 * rng.normal(size=5000)
        ds = center(Dataset(np.column_stack([x1, x2, x3])))
        a = gfa(ds, build("singletons", 3), 1e-6, argmax="original")
        b = gfa(ds, build("singletons", 3), 1e-6, argmax="current")
        assert a.selected == (0, 2, 1)
        assert b.selected == (0, 1, 2)


class TestUFFS:
    def test_character_order(self):
        assert uffs_characters(3, 3) == [(), (1,), (2,), (1, 2), (3,), (1, 3), (2, 3), (1, 2, 3)]
        assert uffs_characters(3, 1) == [(), (1,), (2,), (3,)]

    def test_guard(self):
        with pytest.raises(ValueError):
            uffs_characters(200, 3)

    def test_independent_signs(self):
        model = uffs(cube(3), 3, 0.99)
        np.testing.assert_allclose(model.fourier_norms, 1.0, atol=1e-12)
        assert model.selected == (0, 1, 2)

    def test_product_rejected(self):
        model = uffs(cube(2, [(1,), (2,), (1, 2)]), 3, 0.5)
        np.testing.assert_allclose(model.fourier_norms, [1.0, 1.0, 0.0], atol=1e-12)
        assert model.selected == (0, 1)

    def test_ranking_mode(self):
        H = hypercube_enumerate(3)
        X = H * [1.0, 3.0, 2.0]
        model = uffs(Dataset(X), 2, 0.0, ranking=True, n_select=2)
        assert model.selected == (1, 2)
        np.testing.assert_allclose(model.per_step_sigma, [9.0, 4.0])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.data())
    def test_gfs_matches_uffs(self, k, data):
        # k independent signs, plus products of random subsets as extra features.
        extra = data.draw(st.lists(
            st.sets(st.integers(1, k), min_size=2, max_size=k).map(lambda s: tuple(sorted(s))),
            max_size=6 - k, unique=True))
        defs = [(i,) for i in range(1, k + 1)] + extra
        order = data.draw(st.permutations(range(len(defs))))
        defs = [defs[i] for i in order]
        ds = cube(k, defs)
        d = ds.n_features
        u = uffs(ds, d, 0.5)
        g = gfs(ds, build("multilinear", d, d), 0.5)
        assert set(g.selected) == set(u.selected)
