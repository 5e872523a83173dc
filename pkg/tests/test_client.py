import json
import subprocess

import numpy as np
import pytest

dc = pytest.importorskip("dsco_client")

from dsco import io as fio
from dsco import model as mdl
from dsco.engine import brute_force_oracle
from conftest import make_instance


def _models_from_instance(inst, name, normalize=False):
    big_m = inst.sparsity.big_m
    return [dc.ClientModel(name=name, rank=r,
                           problem_type=("classification"
                                         if obj.kind == mdl.ObjectiveKind.LOGISTIC
                                         else "regression"),
                           X=obj.data.X, y=obj.data.y, lam=obj.lam,
                           kappa=inst.sparsity.kappa,
                           big_m=big_m[0] if big_m else None,
                           normalize=normalize)
            for r, obj in enumerate(inst.objectives)]


class TestCreate:
    def test_roundtrip_accepted_by_parser(self, tmp_path):
        inst = make_instance("logr", n=4, p=25, N=2, kappa=2, lam=0.1, seed=70)
        for m in _models_from_instance(inst, "toy"):
            dc.create(m, tmp_path)
        parsed = fio.parse_problem_dir(tmp_path)
        assert parsed.num_nodes == 2
        assert parsed.n == 4
        assert parsed.sparsity.kappa == 2
        np.testing.assert_array_equal(parsed.objectives[0].data.X,
                                      inst.objectives[0].data.X)

    def test_kappa_too_large_raises_before_writing(self, tmp_path):
        m = dc.ClientModel(name="bad", problem_type="regression",
                           X=np.ones((3, 2)), y=np.zeros(3), kappa=3)
        with pytest.raises(dc.ClientValidationError, match="kappa"):
            dc.create(m, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_normalize_writes_unit_columns(self, tmp_path):
        rng = np.random.default_rng(1)
        m = dc.ClientModel(name="norm", problem_type="regression",
                           X=rng.normal(3.0, 2.0, (20, 4)), y=rng.normal(size=20),
                           kappa=1, normalize=True)
        path = dc.create(m, tmp_path)
        doc = json.loads(path.read_text())
        X = np.array(doc["X"])
        np.testing.assert_allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-12)
        assert doc["normalized"] is True

    def test_matches_gen_files_semantically(self, tmp_path):
        """Client output for the same data parses to the same instance as gen's."""
        gen_dir, cli_dir = tmp_path / "gen", tmp_path / "client"
        subprocess.run(["dsco", "gen", "--type", "regression", "--n", "4",
                        "--p", "20", "--nodes", "2", "--kappa", "2",
                        "--seed", "3", "--name", "same", "--out", str(gen_dir)],
                       check=True, capture_output=True)
        inst = fio.parse_problem_dir(gen_dir)
        for m in _models_from_instance(inst, "same", normalize=False):
            m.normalize = False
            dc.create(m, cli_dir)
        ours = fio.parse_problem_dir(cli_dir)
        assert ours.sparsity.kappa == inst.sparsity.kappa
        for a, b in zip(ours.objectives, inst.objectives):
            assert a.kind == b.kind
            assert a.lam == b.lam
            np.testing.assert_array_equal(a.data.X, b.data.X)
            np.testing.assert_array_equal(a.data.y, b.data.y)

    def test_settings_doc_accepted_by_solver_parser(self):
        doc = dc.ClientSettings(time_limit=5.0, algorithm="dipoa").to_doc()
        settings, normalize = fio.parse_settings(doc)
        assert settings.algorithm == "dipoa"
        assert settings.time_limit == 5.0
        assert normalize is False


class TestRun:
    def test_solve_matches_oracle(self):
        inst = make_instance("linr", n=5, p=30, N=2, kappa=2, lam=0.1, seed=71)
        _, _, want = brute_force_oracle(inst)
        res = dc.run(_models_from_instance(inst, "oracle"),
                     dc.ClientSettings(time_limit=120.0), timeout=300.0)
        assert res.optimal and res.exit_code == dc.EXIT_OK
        assert abs(res.objective - want) <= 1e-5 * (1.0 + abs(want))
        assert len(res.support) <= 2

    def test_tiny_time_limit_returns_time_limit_result(self):
        inst = make_instance("logr", n=8, p=60, N=2, kappa=3, lam=0.1, seed=72)
        res = dc.run(_models_from_instance(inst, "rushed"),
                     dc.ClientSettings(time_limit=0.01), timeout=300.0)
        assert res.time_limit and res.exit_code == dc.EXIT_TIME_LIMIT
        assert res.doc["status"] == "time_limit"

    def test_missing_binary_raises_environment_error(self):
        inst = make_instance("linr", n=3, p=15, N=1, kappa=1, lam=0.1, seed=73)
        with pytest.raises(dc.SolverNotFound, match="not found"):
            dc.run(_models_from_instance(inst, "nobin"),
                   solver="definitely-not-a-solver-binary")

    def test_inconsistent_ranks_surface_as_typed_error(self):
        # same rank twice: caught client-side before any subprocess spawns
        inst = make_instance("linr", n=3, p=15, N=2, kappa=1, lam=0.1, seed=74)
        models = _models_from_instance(inst, "dup")
        models[1].rank = 0
        with pytest.raises(ValueError, match="ranks"):
            dc.run(models)

    def test_solver_error_carries_stderr(self, tmp_path):
        # mismatched kappa across nodes passes local checks but fails the
        # solver's cross-file validation with exit code 1
        inst = make_instance("linr", n=3, p=15, N=2, kappa=1, lam=0.1, seed=75)
        models = _models_from_instance(inst, "mixk")
        models[1].kappa = 2
        with pytest.raises(dc.SolverError, match="kappa"):
            dc.run(models, dc.ClientSettings(time_limit=30.0), timeout=120.0)
