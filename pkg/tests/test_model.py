import dataclasses

import numpy as np
import pytest

from dsco import model as mdl


def _copy(inst, **kw):
    return dataclasses.replace(inst, **kw)


class TestGenerators:
    def test_deterministic(self):
        a = mdl.generate_dslogr(n=6, p=30, N=2, kappa=2, lam=0.1, seed=5)
        b = mdl.generate_dslogr(n=6, p=30, N=2, kappa=2, lam=0.1, seed=5)
        for oa, ob in zip(a.objectives, b.objectives):
            np.testing.assert_array_equal(oa.data.X, ob.data.X)
            np.testing.assert_array_equal(oa.data.y, ob.data.y)

    def test_seed_changes_data(self):
        a = mdl.generate_dslinr(n=6, p=30, N=1, kappa=2, lam=0.1, noise_sd=0.1, seed=5)
        b = mdl.generate_dslinr(n=6, p=30, N=1, kappa=2, lam=0.1, noise_sd=0.1, seed=6)
        assert not np.array_equal(a.objectives[0].data.X, b.objectives[0].data.X)

    def test_shapes_and_validity(self):
        inst = mdl.generate_dslogr(n=7, p=25, N=3, kappa=3, lam=0.05, seed=0)
        assert inst.n == 7 and inst.num_nodes == 3
        assert inst.hypergraph.num_edges == 1
        for obj in inst.objectives:
            assert obj.data.X.shape == (25, 7)
            assert set(np.unique(obj.data.y)) <= {-1.0, 1.0}
        assert mdl.validate_instance(inst) == []

    def test_columns_normalized(self):
        inst = mdl.generate_dslinr(n=5, p=40, N=2, kappa=2, lam=0.1, noise_sd=0.1, seed=3)
        for obj in inst.objectives:
            X = obj.data.X
            np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-12)
            np.testing.assert_allclose(np.linalg.norm(X, axis=0), 1.0, rtol=1e-12)

    @pytest.mark.parametrize("kw", [
        dict(n=0, p=10, N=1, kappa=1),
        dict(n=5, p=10, N=0, kappa=1),
        dict(n=5, p=10, N=1, kappa=0),
        dict(n=5, p=10, N=1, kappa=6),
    ])
    def test_bad_args(self, kw):
        with pytest.raises(ValueError):
            mdl.generate_dslogr(lam=0.1, seed=0, **kw)
        with pytest.raises(ValueError):
            mdl.generate_dslinr(lam=0.1, noise_sd=0.1, seed=0, **kw)

    def test_negative_noise(self):
        with pytest.raises(ValueError):
            mdl.generate_dslinr(n=5, p=10, N=1, kappa=1, lam=0.1, noise_sd=-1.0, seed=0)


class TestValidateInstance:
    def _base(self):
        return mdl.generate_dslogr(n=5, p=20, N=2, kappa=2, lam=0.1, seed=1)

    def test_clean(self):
        assert mdl.validate_instance(self._base()) == []

    def test_logistic_labels(self):
        inst = self._base()
        inst.objectives[0].data.y[0] = 2.0
        errs = mdl.validate_instance(inst)
        assert any("-1,+1" in e for e in errs)

    def test_nan_entries(self):
        inst = self._base()
        inst.objectives[1].data.X[0, 0] = np.nan
        assert any("NaN" in e for e in mdl.validate_instance(inst))

    def test_negative_lambda(self):
        inst = self._base()
        inst.objectives[0].lam = -0.5
        assert any("lambda" in e for e in mdl.validate_instance(inst))

    def test_kappa_range(self):
        inst = self._base()
        inst.sparsity.kappa = 9
        assert any("kappa" in e for e in mdl.validate_instance(inst))

    def test_big_m_length(self):
        inst = _copy(self._base(),
                     sparsity=mdl.SparsityModel(kappa=2, big_m=[1.0, 1.0]))
        assert any("big_m" in e for e in mdl.validate_instance(inst))

    def test_big_m_positive(self):
        inst = _copy(self._base(), sparsity=mdl.SparsityModel(kappa=2, big_m=[-1.0]))
        assert any("positive" in e for e in mdl.validate_instance(inst))

    def test_uncovered_node(self):
        inst = self._base()
        inst.hypergraph.edges[0] = [0]
        assert any("no edge" in e for e in mdl.validate_instance(inst))

    def test_disconnected(self):
        inst = self._base()
        inst.hypergraph.edges = [[0], [1]]
        assert any("not connected" in e for e in mdl.validate_instance(inst))

    def test_bad_edge_index(self):
        inst = self._base()
        inst.hypergraph.edges = [[0, 1, 5]]
        assert any("out of" in e for e in mdl.validate_instance(inst))

    def test_feature_mismatch(self):
        inst = self._base()
        inst.objectives[0].data.X = np.ones((20, 4))
        assert any("expected shape" in e for e in mdl.validate_instance(inst))


class TestNormalize:
    def test_unit_columns(self):
        rng = np.random.default_rng(0)
        d = mdl.Dataset(rng.standard_normal((30, 4)) * 10 + 3, rng.standard_normal(30))
        nd = mdl.normalize_dataset(d)
        np.testing.assert_allclose(nd.X.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(nd.X, axis=0), 1.0, rtol=1e-12)
        np.testing.assert_array_equal(nd.y, d.y)

    def test_constant_column(self):
        d = mdl.Dataset(np.ones((10, 2)), np.zeros(10))
        with pytest.raises(mdl.DegenerateColumn):
            mdl.normalize_dataset(d)

    def test_single_row(self):
        d = mdl.Dataset(np.ones((1, 2)), np.zeros(1))
        with pytest.raises(ValueError):
            mdl.normalize_dataset(d)


class TestBigM:
    def test_estimate_positive_per_edge(self):
        inst = mdl.generate_dslinr(n=5, p=30, N=2, kappa=2, lam=0.1, noise_sd=0.1, seed=4)
        ms = mdl.estimate_big_m(inst)
        assert len(ms) == inst.hypergraph.num_edges
        assert all(m >= 1.0 for m in ms)

    def test_with_big_m_estimated_flag(self):
        inst = mdl.generate_dslogr(n=5, p=30, N=1, kappa=2, lam=0.1, seed=4)
        est = mdl.with_big_m(inst)
        assert est.sparsity.estimated
        assert est.sparsity.big_m is not None
        assert inst.sparsity.big_m is None  # original untouched

    def test_with_big_m_explicit(self):
        inst = mdl.generate_dslogr(n=5, p=30, N=1, kappa=2, lam=0.1, seed=4)
        got = mdl.with_big_m(inst, [3.5])
        assert got.sparsity.big_m == [3.5]
        assert not got.sparsity.estimated
