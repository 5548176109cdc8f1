import numpy as np
import pytest

from itl_pursuit import PursuitConfig
from itl_pursuit.experiments import (
    SMALL_DIMS,
    ClassTask,
    NoiseSpec,
    aggregate,
    best_p,
    corrupt,
    gen_dictionary,
    gen_sparse_vector,
    make_problem,
    occlusion_block,
    p_sweep,
    recovery_error,
    run_benchmark,
    run_classification,
    snr_db,
    synthetic_patch,
    trial_seed,
)


class TestGenerators:
    def test_dictionary_statistics(self):
        A = gen_dictionary(200, 400, 0).atoms
        assert A.shape == (200, 400)
        assert abs(A.mean()) < 3 / np.sqrt(A.size)
        assert 0.95 <= A.var() <= 1.05

    def test_dictionary_determinism_and_degenerate(self):
        np.testing.assert_array_equal(gen_dictionary(5, 7, 3).atoms, gen_dictionary(5, 7, 3).atoms)
        assert gen_dictionary(1, 1, 0).shape == (1, 1)

    def test_sparse_vector(self):
        x = gen_sparse_vector(400, 10, 1)
        nz = x[x != 0]
        assert nz.size == 10 and np.all((np.abs(nz) >= 1) & (np.abs(nz) <= 2))
        full = gen_sparse_vector(5, 5, 2)
        assert np.all(np.abs(full) >= 1)

    def test_sign_balance(self):
        signs = np.concatenate([np.sign(gen_sparse_vector(10, 10, s)) for s in range(1000)])
        assert abs((signs > 0).mean() - 0.5) < 3 * 0.5 / np.sqrt(signs.size)

    def test_bad_sparsity(self):
        with pytest.raises(ValueError):
            gen_sparse_vector(4, 5, 0)


class TestNoise:
    def test_spec_validation(self):
        for kw in (dict(kind="laplace"), dict(fraction=1.5), dict(snr_db=np.inf), dict(outlier_count=-1)):
            with pytest.raises(ValueError):
                NoiseSpec(**kw)

    def test_labels(self):
        assert NoiseSpec("wgn", snr_db=10, outlier_count=6).label == "wgn10dB+out6x30"
        assert NoiseSpec("missing", fraction=0.1).label == "missing0.1"
        assert NoiseSpec("chi2").label == "chi2"

    def test_none_is_identity(self):
        clean = np.arange(5.0)
        np.testing.assert_array_equal(corrupt(clean, NoiseSpec(), 0), clean)

    def test_missing_count(self):
        clean = np.ones(200)
        out = corrupt(clean, NoiseSpec("missing", fraction=0.1), 4)
        assert np.sum(out == 0) == 20

    def test_chi2_moments(self):
        n = 10**5
        e = corrupt(np.zeros(n), NoiseSpec("chi2"), 5)
        assert abs(e.mean() - 1) < 3 * np.sqrt(2 / n)
        assert abs(e.var() - 2) < 3 * np.sqrt(10 / n) * 2

    def test_other_additive_moments(self):
        n = 10**5
        assert abs(corrupt(np.zeros(n), NoiseSpec("exp"), 1).mean() - 1) < 0.02
        assert abs(corrupt(np.zeros(n), NoiseSpec("gaussian"), 2).std() - 0.5) < 0.01
        assert abs(np.median(corrupt(np.zeros(n), NoiseSpec("tdist"), 3))) < 0.02

    def test_wgn_snr(self):
        rng = np.random.default_rng(6)
        for target in (2.0, 10.0, -3.0):
            clean = rng.standard_normal(150)
            noisy = corrupt(clean, NoiseSpec("wgn", snr_db=target), 7)
            assert abs(snr_db(clean, noisy) - target) < 0.1

    def test_outliers(self):
        clean = np.zeros(100)
        spec = NoiseSpec("gaussian", outlier_count=6)
        base = corrupt(clean, NoiseSpec("gaussian"), 8)
        out = corrupt(clean, spec, 8)
        diff = np.abs(out - base)
        assert np.sum(diff > 0) == 6
        np.testing.assert_allclose(diff[diff > 0], 30 * np.std(base))

    def test_too_many_outliers(self):
        with pytest.raises(ValueError):
            corrupt(np.ones(3), NoiseSpec(outlier_count=4), 0)


class TestMetricsAndOcclusion:
    def test_recovery_error(self):
        assert recovery_error([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert recovery_error([1.0, 0.0], [0.0, 0.0]) == 1.0
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal(9), rng.standard_normal(9)
        assert np.isclose(recovery_error(a, b), np.sqrt(sum((a - b) ** 2)))
        with pytest.raises(ValueError):
            recovery_error([1.0], [1.0, 2.0])

    def test_block_counts(self):
        img = np.full(1600, 5.0)
        out = occlusion_block(img, 40, 40, (10, 10, "random"), 1)
        assert np.sum(out != 5.0) == 100
        np.testing.assert_array_equal(occlusion_block(img, 40, 40, (0, 0, "random"), 1), img)
        full = occlusion_block(img, 40, 40, (40, 40, 2.0), 1)
        assert np.all(full == 2.0)

    def test_patch_fill(self):
        out = occlusion_block(np.full(100, -1.0), 10, 10, (4, 5, "patch"), 3).reshape(10, 10)
        rows, cols = np.nonzero(out != -1.0)
        block = out[rows.min():rows.max() + 1, cols.min():cols.max() + 1]
        np.testing.assert_array_equal(block, synthetic_patch(4, 5))

    def test_block_too_large(self):
        with pytest.raises(ValueError):
            occlusion_block(np.ones(16), 4, 4, (5, 1, "random"), 0)
        with pytest.raises(ValueError):
            occlusion_block(np.ones(15), 4, 4, (1, 1, "random"), 0)


class TestBenchmark:
    def test_single_report(self):
        reps = run_benchmark([PursuitConfig.preset("omp", 5)], [NoiseSpec("chi2")], 1, SMALL_DIMS, seed=1)
        assert len(reps) == 1 and reps[0].recovery_error >= 0

    def test_canonical_order_and_threads(self):
        solvers = [PursuitConfig.preset("omp", 5), PursuitConfig.preset("inok", 5)]
        noises = [NoiseSpec("chi2"), NoiseSpec("missing")]
        a = run_benchmark(solvers, noises, 3, SMALL_DIMS, seed=2, threads=1)
        b = run_benchmark(solvers, noises, 3, SMALL_DIMS, seed=2, threads=4)
        keys = [(r.solver_name, r.noise_kind, r.trial_index) for r in a]
        assert keys == [(s, n, t) for s in ("omp", "inok") for n in ("chi2", "missing0.1") for t in range(3)]
        assert [(r.recovery_error, r.seed, r.support_exact) for r in a] == \
            [(r.recovery_error, r.seed, r.support_exact) for r in b]

    def test_solvers_see_paired_instances(self):
        reps = run_benchmark([PursuitConfig.preset("omp", 5)] * 2, [NoiseSpec("exp")], 2, SMALL_DIMS, seed=3)
        assert [r.seed for r in reps[:2]] == [r.seed for r in reps[2:]]
        assert [r.recovery_error for r in reps[:2]] == [r.recovery_error for r in reps[2:]]

    def test_failures_recorded(self, monkeypatch):
        from itl_pursuit.errors import SingularSystemError
        from itl_pursuit.experiments import bench

        def broken(*args):
            raise SingularSystemError("forced", float("inf"))

        monkeypatch.setattr(bench, "pursuit_solve", broken)
        reps = run_benchmark([PursuitConfig.preset("omp", 5)], [NoiseSpec()], 1, SMALL_DIMS, seed=0)
        assert reps[0].failed and np.isnan(reps[0].recovery_error)
        row = aggregate(reps)[0]
        assert row["failures"] == 1

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            run_benchmark([PursuitConfig.preset("omp")], [NoiseSpec()], 0)

    def test_aggregate_uses_unbiased_std(self):
        reps = run_benchmark([PursuitConfig.preset("omp", 5)], [NoiseSpec("tdist")], 4, SMALL_DIMS, seed=4)
        errs = [r.recovery_error for r in reps]
        row = aggregate(reps)[0]
        assert np.isclose(row["std_error"], np.std(errs, ddof=1))
        assert np.isclose(row["mean_error"], np.mean(errs))

    def test_trial_seed_is_stable(self):
        assert trial_seed(0, 1, 2) == trial_seed(0, 1, 2) != trial_seed(0, 2, 1)

    def test_make_problem_normalization(self):
        D, x, b = make_problem(SMALL_DIMS, NoiseSpec(), 5)
        np.testing.assert_allclose(np.linalg.norm(D.atoms, axis=0), 1.0)
        np.testing.assert_allclose(b, D.atoms @ x)
        raw, _, _ = make_problem(SMALL_DIMS, NoiseSpec(), 5, normalize_atoms=False)
        assert not np.allclose(np.linalg.norm(raw.atoms, axis=0), 1.0)

    def test_p_sweep_shape(self):
        rows = p_sweep([1.5, 2.0], [NoiseSpec("chi2")], 2, SMALL_DIMS, seed=0)
        assert [(r["p"], r["noise"]) for r in rows] == [(1.5, "chi2"), (2.0, "chi2")]
        assert set(best_p(rows)) == {"chi2"}

    def test_best_p_tie_goes_low(self):
        rows = [dict(p=1.5, noise="a", mean_error=1.0), dict(p=1.2, noise="a", mean_error=1.0)]
        assert best_p(rows) == {"a": 1.2}


class TestClassification:
    def test_block_shape(self):
        task = ClassTask()
        h, w = task.block_shape()
        assert h * w == 24 and h <= task.rows and w <= task.cols

    def test_runs_and_confusion_sums(self):
        res = run_classification([(PursuitConfig.preset("omp", 5), "euclidean")], 6, ClassTask(), seed=1)
        conf = np.array(res[0]["confusion"])
        assert conf.sum() == 6 and conf.shape == (3, 3)
        assert 0 <= res[0]["accuracy"] <= 1
