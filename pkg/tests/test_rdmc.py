import itertools

import attr
import numpy as np
import pytest

from rdmc.exceptions import NonFiniteInputError
from rdmc.losses import AbsoluteLoss, PseudoHuberLoss, SquaredLoss, TruncatedAbsoluteLoss
from rdmc.methods.rdmc import (
    RDMC, SolverConfig, SolverState, shrink_singular_values, solve, solve_path, update_L,
    update_multiplier, update_Z)
from rdmc.policies import StoppingPolicy
from rdmc.ratings import center, column_medians
from rdmc.structures import RatingScale, SparseRatingMatrix

LOSSES = [PseudoHuberLoss(), AbsoluteLoss(), TruncatedAbsoluteLoss(2)]


def random_state(rng: np.random.Generator):
    n, p = rng.integers(2, 9, 2)
    n_categories = int(rng.integers(2, 6))
    dense = rng.integers(1, n_categories + 1, (n, p)).astype(float)
    dense[rng.random((n, p)) < 0.4] = np.nan
    dense[0] = 1
    matrix = SparseRatingMatrix.from_dense(dense, RatingScale.uniform(n_categories, p))
    centered = center(matrix)
    state = SolverState(L=rng.standard_normal((n, p)), Z=2 * rng.standard_normal((n, p)),
                        theta=rng.standard_normal((n, p)), iteration=int(rng.integers(0, 30)))
    return centered, state


def cell_objective(value, observed_value, target, mu, loss):
    penalty = mu / 2 * (value - target) ** 2
    return penalty if observed_value is None else loss.evaluate(value - observed_value) + penalty


class TestShrinkSingularValues:
    def test_singular_value_identity(self):
        rng = np.random.default_rng(0)
        matrix = rng.standard_normal((12, 8))
        singular_values = np.linalg.svd(matrix, compute_uv=False)
        threshold = float(np.median(singular_values))
        shrunk, shrunk_values = shrink_singular_values(matrix, threshold)
        expected = np.maximum(singular_values - threshold, 0)
        np.testing.assert_allclose(shrunk_values, expected, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(np.linalg.svd(shrunk, compute_uv=False).sum(),
                                   expected.sum(), rtol=1e-8)

    def test_prox_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            matrix = rng.standard_normal((8, 6))
            threshold = rng.uniform(0.1, 2)

            def prox_objective(z):
                return 0.5 * np.sum((matrix - z) ** 2) + \
                    threshold * np.linalg.svd(z, compute_uv=False).sum()

            shrunk, _ = shrink_singular_values(matrix, threshold)
            best = prox_objective(shrunk)
            for _ in range(50):
                perturbed = shrunk + rng.standard_normal(shrunk.shape) * rng.choice([1e-3, 0.1])
                assert best <= prox_objective(perturbed) + 1e-10

    def test_zero_threshold(self):
        matrix = np.arange(6.0).reshape(2, 3)
        shrunk, _ = shrink_singular_values(matrix, 0)
        np.testing.assert_array_equal(shrunk, matrix)
        assert shrunk is not matrix

    def test_large_threshold(self):
        shrunk, values = shrink_singular_values(np.ones((3, 3)), 10)
        assert not shrunk.any()
        assert not values.any()

    def test_non_finite(self):
        matrix = np.ones((3, 3))
        matrix[1, 2] = np.nan
        exc = pytest.raises(NonFiniteInputError, shrink_singular_values, matrix, 1)
        assert (exc.value.row, exc.value.column) == (1, 2)


class TestUpdateL:
    @pytest.mark.parametrize('loss', LOSSES, ids=['phuber', 'absolute', 'truncated'])
    def test_exhaustive_oracle(self, loss):
        rng = np.random.default_rng(2)
        for _ in range(70):
            centered, state = random_state(rng)
            completed = update_L(state, centered, loss)
            target = state.Z - state.theta / state.mu
            observed = dict(zip(zip(centered.rows.tolist(), centered.cols.tolist()),
                                centered.values.tolist()))
            for i, j in itertools.product(*map(range, centered.shape)):
                categories = centered.scale.categories(j)
                observed_value = observed.get((i, j))
                values = [cell_objective(c, observed_value, target[i, j], state.mu, loss)
                          for c in categories]
                assert completed[i, j] in categories
                assert cell_objective(completed[i, j], observed_value, target[i, j], state.mu,
                                      loss) == pytest.approx(min(values), abs=1e-9)

    def test_unobserved_halfway_rounds_down(self):
        matrix = SparseRatingMatrix.from_dense(np.array([[3.0], [np.nan]]), 5)
        centered = center(matrix)
        state = SolverState(L=np.zeros((2, 1)), Z=np.array([[0.0], [0.5]]),
                            theta=np.zeros((2, 1)))
        assert update_L(state, centered, PseudoHuberLoss())[1, 0] == 0

    def test_unobserved_clipped_to_scale(self):
        matrix = SparseRatingMatrix.from_dense(np.array([[3.0, 3.0], [np.nan, np.nan]]), 5)
        centered = center(matrix)
        state = SolverState(L=np.zeros((2, 2)), Z=np.array([[0.0, 0.0], [9.0, -9.0]]),
                            theta=np.zeros((2, 2)))
        np.testing.assert_array_equal(update_L(state, centered, PseudoHuberLoss())[1], [2, -2])

    @pytest.mark.parametrize('target, expected', [(1.5, 0), (1.6, 1)], ids=['tie', 'no_tie'])
    def test_observed_tie_goes_to_smaller_category(self, target, expected):
        # cell (1, 0) is observed at 0: |c| + (c - target)^2 / 2 ties at c = 0 and c = 1 for 1.5
        matrix = SparseRatingMatrix.from_dense(np.array([[2.0], [3.0], [4.0]]), 5)
        state = SolverState(L=np.zeros((3, 1)), Z=np.array([[0.0], [target], [0.0]]),
                            theta=np.zeros((3, 1)), mu0=1.0)
        assert update_L(state, center(matrix), AbsoluteLoss())[1, 0] == expected


class TestUpdateZ:
    def test_prox_inequality(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            centered, state = random_state(rng)
            lambda_ = rng.uniform(0.01, 3)
            z = update_Z(state, lambda_)
            anchor = state.L + state.theta / state.mu

            def prox_objective(candidate):
                return 0.5 * np.sum((anchor - candidate) ** 2) + \
                    lambda_ / state.mu * np.linalg.svd(candidate, compute_uv=False).sum()

            best = prox_objective(z)
            for _ in range(50):
                assert best <= prox_objective(z + 0.05 * rng.standard_normal(z.shape)) + 1e-10


class TestMultiplier:
    def test_mu_schedule(self):
        state = SolverState(L=np.ones((2, 2)), Z=np.zeros((2, 2)), theta=np.zeros((2, 2)))
        for iteration in range(1, 31):
            state = update_multiplier(state)
            assert state.iteration == iteration
            assert state.mu == 0.1 * 1.05 ** iteration

    def test_theta_update(self):
        state = SolverState(L=np.full((2, 2), 2.0), Z=np.ones((2, 2)), theta=np.ones((2, 2)),
                            iteration=3)
        updated = update_multiplier(state)
        np.testing.assert_allclose(updated.theta, 1 + state.mu)
        np.testing.assert_array_equal(state.theta, 1)


class TestSolverConfig:
    def test_defaults(self):
        config = SolverConfig()
        assert config.mu == 0.1
        assert config.delta == 1.05
        assert config.tol == 1e-4
        assert config.max_iterations == 100
        assert isinstance(config.loss, PseudoHuberLoss)

    @pytest.mark.parametrize('policy, iterations', [
        (StoppingPolicy.liberal, 10),
        (StoppingPolicy.strict, 100)
    ], ids=['liberal', 'strict'])
    def test_for_stopping(self, policy, iterations):
        assert SolverConfig.for_stopping(policy).max_iterations == iterations

    @pytest.mark.parametrize('kwargs, message', [
        ({'lambda_': -1}, 'lambda_ must be non-negative'),
        ({'mu': 0}, 'mu must be positive'),
        ({'delta': 1}, 'delta must be greater than 1'),
        ({'max_iterations': 0}, 'max_iterations must be positive')
    ], ids=['lambda', 'mu', 'delta', 'iterations'])
    def test_invalid(self, kwargs, message):
        pytest.raises(ValueError, SolverConfig, **kwargs).match(message)


class TestSolve:
    def test_observed_anchoring(self, random_matrix: SparseRatingMatrix):
        centered = center(random_matrix)
        L, diagnostics = solve(centered, SolverConfig(lambda_=0, loss=SquaredLoss(),
                                                      max_iterations=20))
        np.testing.assert_allclose(L[centered.rows, centered.cols], centered.values)
        assert diagnostics.iterations <= 20

    def test_huge_lambda_gives_median_imputation(self, small_matrix: SparseRatingMatrix):
        fit = RDMC().fit(small_matrix, 1e12)
        medians = column_medians(small_matrix)
        missing = ~small_matrix.mask()
        np.testing.assert_array_equal(fit.predictions[missing],
                                      np.broadcast_to(medians, (4, 3))[missing])

    def test_warm_start_shape(self, small_matrix: SparseRatingMatrix):
        pytest.raises(ValueError, solve, center(small_matrix), SolverConfig(),
                      (np.zeros((2, 2)), np.zeros((2, 2)))).match('Warm start matrices')

    def test_warm_start_flag(self, small_matrix: SparseRatingMatrix):
        centered = center(small_matrix)
        _, diagnostics = solve(centered, SolverConfig(lambda_=1, max_iterations=5),
                               (centered.dense(), np.zeros(centered.shape)))
        assert diagnostics.warm_started

    def test_diagnostics(self, random_matrix: SparseRatingMatrix):
        _, diagnostics = solve(center(random_matrix), SolverConfig(lambda_=2))
        assert 1 <= diagnostics.iterations <= 100
        assert len(diagnostics.losses) == diagnostics.iterations
        assert diagnostics.final_loss == diagnostics.losses[-1]
        assert np.isfinite(diagnostics.losses).all()
        assert not diagnostics.warm_started


class TestSolvePath:
    def test_empty(self, small_matrix: SparseRatingMatrix):
        pytest.raises(ValueError, solve_path, center(small_matrix), [], SolverConfig()).match(
            'At least one regularization parameter')

    @pytest.mark.parametrize('lambdas', [[2, 1], [1, 1]], ids=['descending', 'repeated'])
    def test_not_increasing(self, small_matrix: SparseRatingMatrix, lambdas):
        pytest.raises(ValueError, solve_path, center(small_matrix), lambdas,
                      SolverConfig()).match('must be strictly increasing')

    def test_warm_starts(self, random_matrix: SparseRatingMatrix):
        path = solve_path(center(random_matrix), [0.5, 1, 2],
                          SolverConfig(max_iterations=10))
        assert [point.lambda_ for point in path] == [0.5, 1, 2]
        assert [point.diagnostics.warm_started for point in path] == [False, True, True]
        assert all(point.diagnostics.iterations <= 10 for point in path)


class TestRDMC:
    @pytest.mark.parametrize('loss', LOSSES, ids=['phuber', 'absolute', 'truncated'])
    def test_discrete_and_observed_preserved(self, random_matrix: SparseRatingMatrix, loss):
        method = RDMC(loss, StoppingPolicy.liberal)
        lambdas = method.lambda_grid(random_matrix)[::3]
        for fit in method.fit_path(random_matrix, lambdas):
            predictions = fit.predictions
            rows, cols = np.indices(predictions.shape).reshape(2, -1)
            assert random_matrix.scale.contains(cols, predictions.reshape(-1)).all()
            np.testing.assert_array_equal(predictions[random_matrix.rows, random_matrix.cols],
                                          random_matrix.values)
            assert fit.scores is fit.predictions
            assert fit.method == 'rdmc'

    def test_half_medians(self):
        dense = np.array([[1, 2], [2, 3], [4, np.nan], [np.nan, 5], [3, 4]], dtype=float)
        matrix = SparseRatingMatrix.from_dense(dense, 5)
        fit = RDMC().fit(matrix, 0.5)
        assert matrix.scale.contains(np.array([0, 1]), fit.predictions[[3, 2], [0, 1]]).all()

    def test_no_lambda(self, small_matrix: SparseRatingMatrix):
        pytest.raises(ValueError, RDMC().fit, small_matrix).match(
            'rdmc needs a regularization parameter')

    def test_deterministic(self, random_matrix: SparseRatingMatrix):
        first = RDMC(stopping=StoppingPolicy.liberal).fit(random_matrix, 1.5)
        second = RDMC(stopping=StoppingPolicy.liberal).fit(random_matrix, 1.5)
        np.testing.assert_array_equal(first.predictions, second.predictions)

    def test_config_overrides(self):
        config = attr.evolve(SolverConfig(), max_iterations=3)
        method = RDMC(config=config)
        assert method.config.max_iterations == 3
        assert method.validation_loss is config.loss
        assert repr(method) == 'RDMC(loss=PseudoHuberLoss(tau=1.0), max_iterations=3)'
