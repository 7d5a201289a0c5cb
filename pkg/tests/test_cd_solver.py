import numpy as np
import pytest
from hypothesis import given, strategies as st

from plaggm.core.exceptions import ConfigError, NonConvergence
from plaggm.core.models import (
    ConfoundedDataset,
    CvRule,
    ProfileDesign,
    SolverConfig,
)
from plaggm.domains.cd_solver import (
    cross_validate,
    cross_validate_design,
    fit_path,
    fit_single,
    kkt_violation,
    lambda_grid,
    lambda_max,
    select_by_aic,
    soft_threshold,
)
from plaggm.domains.kernel_profile import raw_design
from plaggm.domains.ppl_objective import FlatIndex, QuadraticForm, assemble_quadratic
from tests.conftest import correlated_dataset


def _raw(reference, targets):
    return raw_design(targets)


@pytest.fixture
def raw_qf(rng):
    return assemble_quadratic(raw_design(correlated_dataset(rng, 200, 5)))


class TestSoftThreshold:
    @pytest.mark.parametrize("z, gamma, expected", [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-3.0, 1.0, -2.0)])
    def test_examples(self, z, gamma, expected):
        assert soft_threshold(z, gamma) == expected

    @given(z=st.floats(-1e6, 1e6), gamma=st.floats(0, 1e6))
    def test_shrinks_toward_zero(self, z, gamma):
        value = soft_threshold(z, gamma)
        assert abs(value) <= abs(z)
        assert value == 0.0 or np.sign(value) == np.sign(z)
        if abs(z) > gamma:
            assert abs(value) == pytest.approx(abs(z) - gamma)

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)


class TestLambdaMax:
    def test_zero_response(self, rng):
        pd = ProfileDesign(Xp=rng.standard_normal((3, 30, 3)), Yp=np.zeros((3, 30)))
        assert lambda_max(pd) == 0.0

    def test_support_empty_just_above(self, raw_qf, tight_config):
        lam = raw_qf.lambda_max()
        fit = fit_single(raw_qf, 1.001 * lam, config=tight_config)
        assert fit.active_size == 0

    def test_support_nonempty_below(self, raw_qf, tight_config):
        lam = raw_qf.lambda_max()
        fit = fit_single(raw_qf, 0.9 * lam, config=tight_config)
        assert fit.active_size > 0


class TestLambdaGrid:
    def test_log_spaced_and_decreasing(self):
        grid = lambda_grid(2.0, 100, 0.01)
        assert grid.size == 100
        assert grid[0] == pytest.approx(2.0)
        assert grid[-1] == pytest.approx(0.02)
        assert np.all(np.diff(grid) < 0)
        np.testing.assert_allclose(grid[1:] / grid[:-1], grid[1] / grid[0])

    def test_zero_maximum(self):
        assert lambda_grid(0.0, 50, 0.01).tolist() == [0.0]


class TestFitSingle:
    def test_unpenalized_matches_linear_solve(self, raw_qf, tight_config):
        fit = fit_single(raw_qf, 0.0, config=tight_config)
        exact = np.linalg.solve(raw_qf.H, raw_qf.b)
        np.testing.assert_allclose(fit.theta.vector, exact, atol=1e-8)
        assert fit.converged

    def test_closed_form_two_nodes(self, tight_config):
        qf = QuadraticForm(
            H=np.diag([1.0, 1.0, 2.0]), b=np.array([0.5, -0.3, 1.5]), c=0.0, index=FlatIndex(2), n=10
        )
        fit = fit_single(qf, 0.4, config=tight_config)
        np.testing.assert_allclose(fit.theta.vector, [0.5, -0.3, 0.55])

    def test_above_lambda_max_is_empty(self, raw_qf):
        fit = fit_single(raw_qf, 2.0 * raw_qf.lambda_max())
        assert np.all(fit.theta.offdiag == 0.0)

    def test_kkt_certificate(self, raw_qf, tight_config):
        lam = 0.3 * raw_qf.lambda_max()
        fit = fit_single(raw_qf, lam, config=tight_config)
        assert fit.kkt_violation < 1e-6
        assert kkt_violation(raw_qf, fit.theta.vector, lam) == fit.kkt_violation

    @pytest.mark.parametrize("seed", range(5))
    def test_mid_path_fit_from_cold_start(self, seed, tight_config):
        # 每次坐标更新后梯度必须原地刷新, 否则第一次非零更新即出错
        rng = np.random.default_rng(seed)
        qf = assemble_quadratic(raw_design(correlated_dataset(rng, 120, 4)))
        lam = 0.5 * qf.lambda_max()
        fit = fit_single(qf, lam, config=tight_config)
        assert fit.converged
        assert np.all(np.isfinite(fit.theta.vector))
        assert fit.kkt_violation < 1e-6
        assert fit.kkt_violation == kkt_violation(qf, fit.theta.vector, lam)

    def test_strict_non_convergence(self, raw_qf):
        config = SolverConfig(tol=1e-15, max_sweeps=1)
        with pytest.raises(NonConvergence) as excinfo:
            fit_single(raw_qf, 0.0, config=config, strict=True)
        assert excinfo.value.sweeps == 1
        assert excinfo.value.best is not None

    def test_lenient_non_convergence(self, raw_qf):
        fit = fit_single(raw_qf, 0.0, config=SolverConfig(tol=1e-15, max_sweeps=1))
        assert not fit.converged

    def test_negative_lambda(self, raw_qf):
        with pytest.raises(ConfigError):
            fit_single(raw_qf, -1.0)


class TestFitPath:
    @pytest.mark.parametrize("seed", range(10))
    def test_kkt_and_screening_safety(self, seed):
        rng = np.random.default_rng(seed)
        qf = assemble_quadratic(raw_design(correlated_dataset(rng, 150, 5)))
        lambdas = lambda_grid(qf.lambda_max(), 30, 0.01)
        screened = fit_path(qf, lambdas, SolverConfig(tol=1e-12, max_sweeps=100000, screening=True))
        plain = fit_path(qf, lambdas, SolverConfig(tol=1e-12, max_sweeps=100000, screening=False))
        for a, b in zip(screened.points, plain.points):
            assert a.kkt_violation < 1e-6
            assert np.max(np.abs(a.theta.vector - b.theta.vector)) < 1e-8

    def test_first_point_empty(self, raw_qf, tight_config):
        lambdas = lambda_grid(raw_qf.lambda_max() * 1.0001, 10, 0.05)
        path = fit_path(raw_qf, lambdas, tight_config)
        assert path.points[0].active_size == 0

    def test_descent_from_warm_start(self, raw_qf, tight_config):
        lambdas = lambda_grid(raw_qf.lambda_max(), 25, 0.01)
        path = fit_path(raw_qf, lambdas, tight_config)
        for prev, point in zip(path.points, path.points[1:]):
            warm = raw_qf.penalized_value(prev.theta.vector, point.lam)
            assert point.objective <= warm + 1e-12

    def test_warm_and_cold_starts_agree(self, raw_qf, tight_config):
        lambdas = lambda_grid(raw_qf.lambda_max(), 15, 0.01)
        path = fit_path(raw_qf, lambdas, tight_config)
        for point in path.points:
            cold = fit_single(raw_qf, point.lam, config=tight_config)
            assert abs(cold.objective - point.objective) <= 1e-9

    def test_active_size_recorded(self, raw_qf, tight_config):
        path = fit_path(raw_qf, lambda_grid(raw_qf.lambda_max(), 10, 0.01), tight_config)
        for point in path.points:
            assert point.active_size == np.count_nonzero(point.theta.offdiag)
        assert path.points[-1].active_size > 0

    def test_increasing_lambdas_rejected(self, raw_qf):
        with pytest.raises(ConfigError):
            fit_path(raw_qf, [0.1, 0.2])


class TestCrossValidation:
    def test_curve_bookkeeping(self, rng):
        ds = correlated_dataset(rng, 90, 4)
        lambdas = lambda_grid(lambda_max(raw_design(ds)), 15, 0.05)
        cv = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=3, n_lambda=15))
        assert cv.lambdas.size == cv.mean.size == cv.sd.size == 15 - cv.dropped
        assert cv.best_lambda in cv.lambdas.tolist()
        assert cv.fold_errors == {}

    def test_leave_one_out(self, rng):
        ds = correlated_dataset(rng, 12, 2)
        lambdas = lambda_grid(lambda_max(raw_design(ds)), 5, 0.1)
        cv = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=12, n_lambda=5))
        assert cv.mean.size == 5

    def test_too_few_samples(self, rng):
        ds = correlated_dataset(rng, 5, 2)
        with pytest.raises(ConfigError):
            cross_validate_design(ds, _raw, [1.0, 0.5], SolverConfig(folds=10))

    def test_one_se_is_more_conservative(self, rng):
        ds = correlated_dataset(rng, 120, 4)
        lambdas = lambda_grid(lambda_max(raw_design(ds)), 20, 0.01)
        best = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=4))
        one_se = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=4, cv_rule=CvRule.ONE_SE))
        assert one_se.best_lambda >= best.best_lambda

    def test_deterministic_given_seed(self, rng):
        ds = correlated_dataset(rng, 60, 3)
        lambdas = lambda_grid(lambda_max(raw_design(ds)), 8, 0.05)
        a = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=5, seed=3))
        b = cross_validate_design(ds, _raw, lambdas, SolverConfig(folds=5, seed=3))
        assert np.array_equal(a.mean, b.mean)

    def test_pla_cross_validation(self, small_dataset, soft_indicator, gaussian_kernel):
        cv = cross_validate(
            small_dataset, soft_indicator, gaussian_kernel, SolverConfig(folds=3, n_lambda=8)
        )
        assert cv.mean.size == 8 - cv.dropped
        assert np.all(np.isfinite(cv.mean))

    @pytest.mark.slow
    def test_pure_noise_prefers_heavy_regularization(self):
        heavy = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            ds = ConfoundedDataset(g=rng.standard_normal(200), Z=rng.standard_normal((200, 4)))
            lambdas = lambda_grid(lambda_max(raw_design(ds)), 20, 0.01)
            cv = cross_validate_design(
                ds, _raw, lambdas, SolverConfig(folds=10, seed=seed, cv_rule=CvRule.ONE_SE)
            )
            heavy += cv.best_lambda >= lambdas[4]
        assert heavy >= 6

    def test_aic_selects_path_lambda(self, raw_qf, tight_config):
        path = fit_path(raw_qf, lambda_grid(raw_qf.lambda_max(), 10, 0.01), tight_config)
        assert select_by_aic(path, raw_qf) in path.lambdas.tolist()
