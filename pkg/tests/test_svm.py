import numpy as np
import pytest

import oracles
from helpers import random_svm
from sacd import (ConfigurationError, ContractError, LabeledDataset, SAConfig, SvmProblem,
                  SvmState, duality_gap, primal_objective, run_svm_cd, sa_svm_run, svm_cd_step)
from sacd.svm import init_state


def one_by_one(loss):
    return SvmProblem(LabeledDataset.from_dense(np.array([[1.0]]), np.array([1.0])), 1.0, loss)


class TestSteps:
    def test_l1_single_point(self):
        p = one_by_one("L1")
        st = svm_cd_step(p, init_state(p), 0)
        assert st.alpha.tolist() == [1.0] and st.x.tolist() == [1.0]
        assert duality_gap(p, st) == 0.0

    def test_l2_single_point(self):
        p = one_by_one("L2")
        st = svm_cd_step(p, init_state(p), 0)
        assert st.alpha[0] == pytest.approx(2 / 3) and st.x[0] == pytest.approx(2 / 3)
        assert duality_gap(p, st) == pytest.approx(0.0, abs=1e-15)

    def test_clamped_coordinate_stays(self):
        p = one_by_one("L1")
        st = svm_cd_step(p, init_state(p), 0)
        again = svm_cd_step(p, st, 0)
        assert np.array_equal(again.alpha, st.alpha) and np.array_equal(again.x, st.x)

    def test_zero_state_gap(self):
        ds = random_svm(0, 9, 4)
        for loss in ("L1", "L2"):
            p = SvmProblem(ds, 0.7, loss)
            assert duality_gap(p, init_state(p)) == pytest.approx(0.7 * 9)

    def test_infeasible_alpha(self):
        p = one_by_one("L1")
        with pytest.raises(ContractError):
            duality_gap(p, SvmState(np.array([2.0]), np.array([2.0])))
        with pytest.raises(ContractError):
            duality_gap(one_by_one("L2"), SvmState(np.array([-1.0]), np.array([-1.0])))

    def test_row_range(self):
        with pytest.raises(ConfigurationError):
            svm_cd_step(one_by_one("L1"), init_state(one_by_one("L1")), 1)


class TestProblem:
    def test_loss_name(self):
        assert SvmProblem(random_svm(0, 4, 2), 1.0, "l2").loss == "L2"
        with pytest.raises(ConfigurationError):
            SvmProblem(random_svm(0, 4, 2), 1.0, "hinge")

    def test_labels_must_be_binary(self):
        ds = LabeledDataset.from_dense(np.eye(2), np.array([1.0, 0.0]))
        with pytest.raises(ConfigurationError):
            SvmProblem(ds)

    def test_lambda_positive(self):
        with pytest.raises(ConfigurationError):
            SvmProblem(random_svm(0, 4, 2), 0.0)


class TestRuns:
    @pytest.mark.parametrize("loss", ["L1", "L2"])
    def test_matches_oracle_and_keeps_invariants(self, loss):
        ds = random_svm(1, 20, 8)
        A = ds.A.to_dense()
        p = SvmProblem(ds, 1.0, loss)
        draws = oracles.svm_draws(5, 20, 40)
        alphas, xs = oracles.svm_dcd(A, ds.labels, 1.0, loss, draws)
        st = init_state(p)
        for i, a_ref, x_ref in zip(draws, alphas, xs):
            st = svm_cd_step(p, st, i)
            assert np.allclose(st.alpha, a_ref, rtol=1e-12, atol=1e-14)
            assert np.allclose(st.x, A.T @ (ds.labels * st.alpha), rtol=1e-10, atol=1e-12)
            assert st.alpha.min() >= 0.0
            if loss == "L1":
                assert st.alpha.max() <= 1.0
            assert duality_gap(p, st) >= -1e-12

    @pytest.mark.parametrize("loss", ["L1", "L2"])
    @pytest.mark.parametrize("s", [2, 4, 8])
    def test_sa_equivalent(self, loss, s):
        p = SvmProblem(random_svm(2, 20, 8), 1.0, loss)
        ref = run_svm_cd(p, 40, seed=3)
        r = sa_svm_run(p, 40, SAConfig(s, seed=3))
        assert np.allclose(r.x, ref.x, rtol=1e-10, atol=1e-12)
        assert np.allclose(r.state.alpha, ref.state.alpha, rtol=1e-10, atol=1e-12)
        assert r.stats.rounds == -(-40 // s)

    def test_records_are_gaps(self):
        p = SvmProblem(random_svm(3, 15, 6), 1.0, "L2")
        r = run_svm_cd(p, 30, seed=0, log_every=10)
        assert [rec.iteration for rec in r.records] == [10, 20, 30]
        assert r.records[-1].metric == pytest.approx(duality_gap(p, r.state), rel=1e-12)

    def test_primal_bounds_gap(self):
        p = SvmProblem(random_svm(4, 15, 6), 1.0, "L1")
        r = run_svm_cd(p, 60, seed=1, record=False)
        assert primal_objective(p, r.x) >= duality_gap(p, r.state) - 1e-12

    def test_repeated_index(self):
        class Rigged:
            def __init__(self, seed, m, block):
                self.seq = iter([3, 3, 1, 3, 0, 1] * 4)

            def draw(self):
                return np.array([next(self.seq)], dtype=np.int64)

        ds = random_svm(5, 6, 4)
        draws = [3, 3, 1, 3, 0, 1] * 4
        for loss in ("L1", "L2"):
            alphas, xs = oracles.svm_dcd(ds.A.to_dense(), ds.labels, 1.0, loss, draws)
            r = sa_svm_run(SvmProblem(ds, 1.0, loss), 24, SAConfig(6), sampler_factory=Rigged)
            assert np.allclose(r.state.alpha, alphas[-1], rtol=1e-12, atol=1e-14)
            assert np.allclose(r.x, xs[-1], rtol=1e-12, atol=1e-14)
