import numpy as np
import pytest
from scipy.optimize import linprog

from quantgen import Dataset, fit_path, fit_quantile, pinball_loss
from quantgen.errors import (
    ConvergenceError,
    DegenerateDesignError,
    LevelError,
    ParameterError,
)
from quantgen.quantreg import QuantileCoefficients, pinball_objective

from conftest import make_regression_instance


def intercept_data(values) -> Dataset:
    y = np.asarray(values, dtype=float)
    return Dataset(np.ones((y.size, 1)), y)


def brute_force_best_objective(data: Dataset, tau: float) -> float:
    """Exhaustive scan over data points and midpoints (intercept-only)."""
    y = np.sort(data.responses)
    cands = np.concatenate([y, (y[:-1] + y[1:]) / 2])
    return min(pinball_objective(data, np.array([c]), tau) for c in cands)


class TestPinballLoss:
    def test_zero_residual(self):
        assert pinball_loss(0.0, 0.37) == 0.0

    def test_positive_residual(self):
        assert pinball_loss(2.0, 0.3) == pytest.approx(0.6, abs=1e-15)

    def test_negative_residual(self):
        assert pinball_loss(-2.0, 0.3) == pytest.approx(1.4, abs=1e-15)

    def test_tau_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(ParameterError):
                pinball_loss(1.0, bad)

    def test_nonnegative_and_homogeneous(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=200)
        for tau in (0.05, 0.3, 0.5, 0.77, 0.95):
            loss = pinball_loss(u, tau)
            assert np.all(loss >= 0)
            for lam in (0.5, 2.0, 13.0):
                assert np.allclose(pinball_loss(lam * u, tau), lam * loss, rtol=1e-12)

    def test_vectorized(self):
        out = pinball_loss(np.array([0.0, 2.0, -2.0]), 0.3)
        assert np.allclose(out, [0.0, 0.6, 1.4])


class TestFitQuantile:
    def test_median_of_five(self):
        beta = fit_quantile(intercept_data([1, 2, 3, 4, 5]), 0.5)
        assert beta[0] == pytest.approx(3.0, abs=1e-7)

    def test_upper_quantile_two_points(self):
        # objective 9 - 0.8 b is decreasing on [0, 10], optimum at the top
        beta = fit_quantile(intercept_data([0, 10]), 0.9)
        assert beta[0] == pytest.approx(10.0, abs=1e-6)

    def test_noise_free_linear_recovery(self):
        rng = np.random.default_rng(3)
        X = np.column_stack([np.ones(300), rng.uniform(0, 10, 300), rng.uniform(-5, 5, 300)])
        beta0 = np.array([2.0, -1.5, 0.7])
        data = Dataset(X, X @ beta0)
        beta = fit_quantile(data, 0.5)
        assert np.allclose(beta, beta0, atol=1e-6)

    def test_rank_deficient_design(self):
        rng = np.random.default_rng(1)
        x1 = rng.normal(size=50)
        X = np.column_stack([np.ones(50), x1, 2.0 * x1])
        with pytest.raises(DegenerateDesignError) as err:
            fit_quantile(Dataset(X, rng.normal(size=50)), 0.5)
        assert err.value.column_index in (1, 2)

    def test_zero_column_reported(self):
        X = np.column_stack([np.ones(20), np.zeros(20)])
        with pytest.raises(DegenerateDesignError) as err:
            fit_quantile(Dataset(X, np.arange(20.0)), 0.5)
        assert err.value.column_index == 1

    def test_convergence_error_carries_gap(self):
        data = make_regression_instance(5, 80, 3)
        with pytest.raises(ConvergenceError) as err:
            fit_quantile(data, 0.3, max_iter=1)
        assert err.value.gap > 0
        assert err.value.iterations == 1

    def test_brute_force_equivalence(self):
        # "to 1e-8" in the same scaled sense as the solver's stated gap
        # tolerance 1e-8 * (1 + |objective|)
        rng = np.random.default_rng(7)
        for trial in range(40):
            n = int(rng.integers(2, 13))
            data = intercept_data(rng.normal(size=n) * rng.uniform(0.5, 4))
            tau = float(rng.uniform(0.05, 0.95))
            got = pinball_objective(data, fit_quantile(data, tau), tau)
            best = brute_force_best_objective(data, tau)
            assert got - best <= 1e-8 * (1.0 + abs(best))

    def test_quantile_balance(self):
        rng = np.random.default_rng(11)
        for trial in range(60):
            n = int(rng.integers(20, 201))
            p = int(rng.integers(1, 6))
            data = make_regression_instance(int(rng.integers(1 << 30)), n, p)
            tau = float(rng.uniform(0.05, 0.95))
            beta = fit_quantile(data, tau)
            res = data.responses - data.covariates @ beta
            tol = 1e-6 * (1.0 + np.max(np.abs(data.responses)))
            assert np.count_nonzero(res < -tol) <= n * tau + 1e-9
            assert np.count_nonzero(res <= tol) >= n * tau - p - 1e-9

    def test_objective_no_worse_than_least_squares(self):
        for seed in range(10):
            data = make_regression_instance(seed, 120, 4)
            tau = 0.3 + 0.05 * seed
            beta = fit_quantile(data, tau)
            ols, *_ = np.linalg.lstsq(data.covariates, data.responses, rcond=None)
            assert pinball_objective(data, beta, tau) <= pinball_objective(data, tau=tau, beta=ols) + 1e-9

    def test_against_reference_lp_solver(self):
        # independent oracle: the primal LP solved by scipy's HiGHS
        rng = np.random.default_rng(23)
        for trial in range(12):
            n = int(rng.integers(15, 60))
            p = int(rng.integers(1, 4))
            data = make_regression_instance(int(rng.integers(1 << 30)), n, p)
            tau = float(rng.uniform(0.1, 0.9))
            X, y = data.covariates, data.responses
            c = np.concatenate([np.zeros(p), tau * np.ones(n), (1 - tau) * np.ones(n)])
            A_eq = np.hstack([X, np.eye(n), -np.eye(n)])
            res = linprog(c, A_eq=A_eq, b_eq=y, bounds=[(None, None)] * p + [(0, None)] * (2 * n),
                          method="highs")
            assert res.status == 0
            ours = pinball_objective(data, fit_quantile(data, tau), tau)
            assert ours == pytest.approx(res.fun, abs=1e-7 * (1 + abs(res.fun)))


class TestFitPath:
    def test_singleton_matches_single_fit(self):
        data = intercept_data([1, 2, 3, 4, 5])
        path = fit_path(data, [0.5])
        assert np.allclose(path.betas[0], fit_quantile(data, 0.5), atol=1e-9)

    def test_noise_free_constant_across_levels(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([np.ones(200), rng.uniform(0, 5, 200)])
        beta0 = np.array([1.0, 2.0])
        path = fit_path(Dataset(X, X @ beta0), [0.25, 0.5, 0.75])
        assert np.allclose(path.betas, beta0[None, :], atol=1e-6)

    def test_uniform_noise_intercepts(self):
        # y = 1 + x + eps, eps ~ U(-1, 1): Q(tau | x) = 1 + x + (2 tau - 1);
        # centred x keeps the intercept's sampling sd near 0.04, so 0.15 is
        # a safe >3 sd bound per seed
        for seed in (0, 1, 2):
            rng = np.random.default_rng(seed)
            x = rng.uniform(-1, 1, 500)
            X = np.column_stack([np.ones(500), x])
            y = 1.0 + x + rng.uniform(-1, 1, 500)
            path = fit_path(Dataset(X, y), [0.25, 0.75])
            assert abs(path.betas[0, 0] - 0.5) < 0.15
            assert abs(path.betas[1, 0] - 1.5) < 0.15

    def test_levels_validation(self):
        data = intercept_data([1, 2, 3])
        with pytest.raises(ParameterError):
            fit_path(data, [])
        with pytest.raises(ParameterError):
            fit_path(data, [0.5, 0.5])
        with pytest.raises(ParameterError):
            fit_path(data, [0.7, 0.3])

    def test_failure_annotated_with_level(self):
        data = make_regression_instance(9, 60, 2)
        with pytest.raises(LevelError) as err:
            fit_path(data, [0.4, 0.6], max_iter=1)
        assert err.value.level == 0.4
        assert isinstance(err.value.cause, ConvergenceError)

    def test_start_reuse_matches_per_level_fits(self, normal_data_10k):
        levels = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
        path = fit_path(normal_data_10k, levels)
        for j, tau in enumerate(levels):
            solo = fit_quantile(normal_data_10k, tau)
            assert np.allclose(path.betas[j], solo, atol=2e-5)


class TestQuantileCoefficients:
    def test_validation(self):
        with pytest.raises(ParameterError):
            QuantileCoefficients(levels=np.array([0.5, 0.4]), betas=np.zeros((2, 1)))
        with pytest.raises(ParameterError):
            QuantileCoefficients(levels=np.array([0.5]), betas=np.zeros((2, 1)))
        with pytest.raises(ParameterError):
            QuantileCoefficients(levels=np.array([1.2]), betas=np.zeros((1, 1)))

    def test_beta_at(self):
        qc = QuantileCoefficients(levels=np.array([0.2, 0.8]), betas=np.array([[1.0], [2.0]]))
        assert qc.beta_at(0.8)[0] == 2.0
        with pytest.raises(ParameterError):
            qc.beta_at(0.5)
