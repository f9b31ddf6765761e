import math

import numpy as np
import pytest

from bitsense.biht import BIHTConfig, biht_step, run_biht, write_trajectory_csv
from bitsense.core import (
    MeasurementMatrix,
    SignPattern,
    SparseUnitVector,
    gaussian_matrix,
    random_sparse_unit,
    sign_measure,
)
from bitsense.rng import SeedSpec, derive_seed


def small_instance(seed=SeedSpec(40), n=60, k=3, m=1200):
    base = seed
    x = random_sparse_unit(n, k, derive_seed(base, 0))
    A = gaussian_matrix(m, n, derive_seed(base, 1))
    b = sign_measure(A, x.values)
    return x, A, b


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BIHTConfig(k=3, max_iters=0)
        with pytest.raises(ValueError):
            BIHTConfig(k=3, max_iters=5, eta=0.0)
        with pytest.raises(ValueError):
            BIHTConfig(k=0, max_iters=5)

    def test_default_step_size(self):
        assert BIHTConfig(k=2, max_iters=1).eta == pytest.approx(math.sqrt(2 * math.pi))


class TestStep:
    def test_fixed_point_when_signs_agree(self):
        x, A, _ = small_instance()
        b = sign_measure(A, x.values)
        out = biht_step(A, b, x, x.k)
        assert np.array_equal(out.values, x.values)

    def test_hand_computed_single_step(self):
        # A = I_2, x_prev = (1, 0), b = (+1, -1): the correction is
        # (eta/4) * (0, -2), so the descent point is (1, -eta/2) and with
        # k = 1 the iterate lands exactly on (0, -1).
        A = MeasurementMatrix(np.eye(2))
        b = SignPattern(np.array([1, -1]))
        x_prev = SparseUnitVector(np.array([1.0, 0.0]), 1)
        out = biht_step(A, b, x_prev, 1)
        assert np.allclose(out.values, [0.0, -1.0], atol=1e-15)

    def test_hand_computed_single_step_k2(self):
        # Same instance with k = 2: nothing is thresholded away, so the
        # result is (1, -eta/2) normalized by sqrt(1 + pi/2).
        A = MeasurementMatrix(np.eye(2))
        b = SignPattern(np.array([1, -1]))
        x_prev = SparseUnitVector(np.array([1.0, 0.0]), 2)
        eta = math.sqrt(2 * math.pi)
        nrm = math.sqrt(1.0 + math.pi / 2.0)
        out = biht_step(A, b, x_prev, 2)
        assert np.allclose(out.values, [1.0 / nrm, -(eta / 2.0) / nrm], atol=1e-14)

    def test_output_sparse_and_unit(self):
        x, A, b = small_instance(SeedSpec(41))
        start = random_sparse_unit(A.n, x.k, SeedSpec(90))
        out = biht_step(A, b, start, x.k)
        assert np.count_nonzero(out.values) <= x.k
        assert abs(np.linalg.norm(out.values) - 1.0) <= 1e-9

    def test_zero_candidate_keeps_previous_iterate(self):
        # eta = 2 makes the descent point exactly (0, 0) here.
        A = MeasurementMatrix(np.eye(2))
        b = SignPattern(np.array([-1, 1]))
        x_prev = SparseUnitVector(np.array([1.0, 0.0]), 1)
        out = biht_step(A, b, x_prev, 1, eta=2.0)
        assert np.array_equal(out.values, x_prev.values)

    def test_dimension_mismatch(self):
        x, A, b = small_instance()
        with pytest.raises(ValueError):
            biht_step(A, SignPattern(np.array([1, -1])), x, x.k)


class TestRun:
    def test_stationary_when_started_at_truth(self):
        x, A, b = small_instance(SeedSpec(42))
        traj = run_biht(A, b, BIHTConfig(k=x.k, max_iters=4, init=x), truth=x)
        assert traj.error_ds[0] == 0.0
        for it in traj.iterates:
            assert np.array_equal(it.values, x.values)
        assert all(m == 0 for m in traj.mismatch)

    def test_error_bound_holds_each_iteration(self):
        x, A, b = small_instance(SeedSpec(43))
        traj = run_biht(
            A, b, BIHTConfig(k=x.k, max_iters=10, init=derive_seed(SeedSpec(43), 5)), truth=x
        )
        assert math.isnan(traj.lemma1_rhs[0])
        for t in range(1, 11):
            assert traj.error_ds[t] <= traj.lemma1_rhs[t] + 1e-9

    def test_deterministic(self):
        x, A, b = small_instance(SeedSpec(44))
        config = BIHTConfig(k=x.k, max_iters=6, init=derive_seed(SeedSpec(44), 9))
        t1 = run_biht(A, b, config, truth=x)
        t2 = run_biht(A, b, config, truth=x)
        assert t1.error_ds == t2.error_ds
        assert t1.mismatch == t2.mismatch
        for a, bb in zip(t1.iterates, t2.iterates):
            assert np.array_equal(a.values, bb.values)

    def test_sign_fixed_point_stops_moving(self):
        x, A, b = small_instance(SeedSpec(45))
        traj = run_biht(
            A, b, BIHTConfig(k=x.k, max_iters=12, init=derive_seed(SeedSpec(45), 2)), truth=x
        )
        for t in range(len(traj.iterates) - 1):
            if traj.mismatch[t] == 0:
                assert np.array_equal(
                    traj.iterates[t + 1].values, traj.iterates[t].values
                )

    def test_error_decreases_on_average(self):
        errors = []
        for i in range(10):
            x, A, b = small_instance(derive_seed(SeedSpec(46), i), n=80, k=4, m=2500)
            traj = run_biht(
                A,
                b,
                BIHTConfig(k=4, max_iters=6, init=derive_seed(SeedSpec(47), i)),
                truth=x,
            )
            errors.append(traj.error_ds)
        mean = np.asarray(errors).mean(axis=0)
        assert mean[1] < mean[0]
        assert mean[2] < mean[1]
        assert mean[-1] < 0.2

    def test_early_stop(self):
        x, A, b = small_instance(SeedSpec(48))
        traj = run_biht(
            A,
            b,
            BIHTConfig(k=x.k, max_iters=50, init=x, stop_tol=1e-12),
            truth=x,
        )
        assert traj.iterations() == 1  # started at a fixed point

    def test_untracked_run_has_no_error_columns(self):
        x, A, b = small_instance(SeedSpec(49))
        traj = run_biht(A, b, BIHTConfig(k=x.k, max_iters=3, init=x))
        assert traj.error_ds is None and traj.lemma1_rhs is None
        assert len(traj.mismatch) == 4


class TestTrajectoryCsv:
    def test_layout(self, tmp_path):
        x, A, b = small_instance(SeedSpec(50), n=40, k=2, m=400)
        trajs = [
            run_biht(A, b, BIHTConfig(k=2, max_iters=3, init=derive_seed(SeedSpec(51), i)), truth=x)
            for i in range(2)
        ]
        path = tmp_path / "trajectory.csv"
        write_trajectory_csv(path, trajs)
        lines = path.read_text().splitlines()
        assert lines[0] == "trial,iter,d_s,mismatch_L,lemma1_rhs"
        assert len(lines) == 1 + 2 * 4
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0" and first[4] == "nan"
        # d_s column round-trips as float64
        row = lines[2].split(",")
        assert float(row[2]) == trajs[0].error_ds[1]
        assert int(row[3]) == trajs[0].mismatch[1]
