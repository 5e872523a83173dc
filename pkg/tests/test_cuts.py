import numpy as np
import pytest

from dsco import cuts as cu
from dsco import model as mdl
from dsco.engine import oracle_for, strong_convexity_constant


def _oracles():
    inst_lg = mdl.generate_dslogr(n=6, p=30, N=1, kappa=2, lam=0.2, seed=8)
    inst_ls = mdl.generate_dslinr(n=6, p=30, N=1, kappa=2, lam=0.2, noise_sd=0.1, seed=9)
    return [(oracle_for(o.objectives[0]), strong_convexity_constant(o.objectives[0]))
            for o in (inst_lg, inst_ls)]


class TestValidity:
    def test_linear_cut_underestimates(self):
        rng = np.random.default_rng(0)
        for oracle, _ in _oracles():
            for _ in range(50):
                x0 = rng.uniform(-2, 2, 6)
                cut = cu.gen_first_order_cut(oracle, x0)
                for _ in range(20):
                    x = rng.uniform(-2, 2, 6)
                    assert cut.value(x) <= oracle.value(x) + 1e-9

    def test_quadratic_cut_underestimates(self):
        rng = np.random.default_rng(1)
        for oracle, m in _oracles():
            for _ in range(50):
                x0 = rng.uniform(-2, 2, 6)
                cut = cu.gen_second_order_cut(oracle, x0, m)
                for _ in range(20):
                    x = rng.uniform(-2, 2, 6)
                    assert cut.value(x) <= oracle.value(x) + 1e-9

    def test_quadratic_dominance_identity(self):
        """quad - linear == (m/2)||x - x0||^2 exactly, at shared x0."""
        rng = np.random.default_rng(2)
        for oracle, m in _oracles():
            x0 = rng.uniform(-2, 2, 6)
            lin = cu.gen_first_order_cut(oracle, x0)
            quad = cu.gen_second_order_cut(oracle, x0, m)
            for _ in range(100):
                x = rng.uniform(-3, 3, 6)
                diff = quad.value(x) - lin.value(x)
                want = 0.5 * m * float((x - x0) @ (x - x0))
                np.testing.assert_allclose(diff, want, rtol=1e-12, atol=1e-12)

    def test_tangent_of_quadratic_cut_is_valid(self):
        """Kelley linearizations of a quadratic cut still underestimate f."""
        rng = np.random.default_rng(3)
        for oracle, m in _oracles():
            x0 = rng.uniform(-1, 1, 6)
            quad = cu.gen_second_order_cut(oracle, x0, m)
            for _ in range(30):
                z = rng.uniform(-2, 2, 6)
                tangent = quad.linearize_at(z)
                for _ in range(10):
                    x = rng.uniform(-2, 2, 6)
                    assert tangent.value(x) <= quad.value(x) + 1e-12
                    assert tangent.value(x) <= oracle.value(x) + 1e-9

    def test_cut_tight_at_origin_point(self):
        oracle, m = _oracles()[0]
        x0 = np.zeros(6)
        lin = cu.gen_first_order_cut(oracle, x0)
        quad = cu.gen_second_order_cut(oracle, x0, m)
        np.testing.assert_allclose(lin.value(x0), oracle.value(x0), rtol=1e-12)
        np.testing.assert_allclose(quad.value(x0), oracle.value(x0), rtol=1e-12)


class TestApi:
    def test_invalid_m(self):
        oracle, _ = _oracles()[0]
        with pytest.raises(cu.InvalidM):
            cu.gen_second_order_cut(oracle, np.zeros(6), 0.0)
        with pytest.raises(cu.InvalidM):
            cu.gen_second_order_cut(oracle, np.zeros(6), -1.0)

    def test_storage_dedup(self):
        oracle, _ = _oracles()[0]
        store = cu.CutStorage()
        c1 = cu.gen_first_order_cut(oracle, np.zeros(6), node=0)
        assert store.add(c1) == cu.CutStorage.ADDED
        c2 = cu.gen_first_order_cut(oracle, np.full(6, 1e-9), node=0)
        assert store.add(c2) == cu.CutStorage.DUPLICATE
        # same point, different node: kept
        c3 = cu.gen_first_order_cut(oracle, np.zeros(6), node=1)
        assert store.add(c3) == cu.CutStorage.ADDED
        c4 = cu.gen_first_order_cut(oracle, np.ones(6), node=0)
        assert store.add(c4) == cu.CutStorage.ADDED
        assert store.count() == 3
        assert len(store.cuts_for(0)) == 2
        assert len(store.cuts_for(1)) == 1

    def test_storage_counts_by_kind(self):
        oracle, m = _oracles()[0]
        store = cu.CutStorage()
        store.add(cu.gen_first_order_cut(oracle, np.zeros(6)))
        store.add(cu.gen_second_order_cut(oracle, np.ones(6), m))
        assert store.count("linear") == 1
        assert store.count("quadratic") == 1

    def test_to_json(self):
        oracle, m = _oracles()[0]
        store = cu.CutStorage()
        store.add(cu.gen_second_order_cut(oracle, np.zeros(6), m, node=0))
        docs = store.to_json()
        assert len(docs) == 1
        assert docs[0]["kind"] == "quadratic"
        assert len(docs[0]["gradient"]) == 6
