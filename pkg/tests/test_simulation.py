import numpy as np
import pytest
from scipy.stats import norm

from rdmc.enums import Design, Missingness
from rdmc.simulation import (
    RecommenderSimConfig, SurveySimConfig, breakpoints, correlation_matrix, discretize,
    gen_recommender, gen_survey, inject_abandonment, inject_careless, inject_mcar, inject_mnar,
    mean_shift_max, missing_proportions)
from rdmc.structures import SparseRatingMatrix
from rdmc.util import round_half_up


class TestBreakpoints:
    @pytest.mark.parametrize('n_categories, expected', [
        (3, [0, 1.5]),
        (5, [-1.5, -0.5, 0.5, 1.5]),
        (10, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2])
    ], ids=['3', '5', '10'])
    def test_recommender(self, n_categories, expected):
        np.testing.assert_array_equal(breakpoints(n_categories), expected)

    @pytest.mark.parametrize('n_categories, expected', [
        (2, [0]),
        (4, [-1, 0, 1]),
        (7, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    ], ids=['2', '4', '7'])
    def test_survey(self, n_categories, expected):
        np.testing.assert_array_equal(breakpoints(n_categories, Design.survey), expected)

    def test_unsupported_recommender_scale(self):
        pytest.raises(ValueError, breakpoints, 7).match(
            'The recommender design supports 3, 5, 10 categories, got 7')

    def test_survey_needs_two_categories(self):
        pytest.raises(ValueError, breakpoints, 1, Design.survey)


class TestCalibration:
    @pytest.mark.parametrize('n_categories', [3, 5, 10])
    def test_top_category_probability(self, n_categories):
        s_max = mean_shift_max(n_categories)
        assert norm.sf(breakpoints(n_categories)[-1] - s_max) == pytest.approx(0.4)

    def test_top_category_share(self):
        rng = np.random.default_rng(0)
        categories = discretize(rng.standard_normal(200000) + mean_shift_max(5), breakpoints(5))
        assert (categories == 5).mean() == pytest.approx(0.4, abs=0.01)

    def test_middle_category_share(self):
        rng = np.random.default_rng(1)
        categories = discretize(rng.standard_normal(200000), breakpoints(5))
        assert (categories == 3).mean() == pytest.approx(norm.cdf(0.5) - norm.cdf(-0.5),
                                                         abs=0.01)

    def test_missing_proportion_endpoints(self):
        s_max = mean_shift_max(5)
        np.testing.assert_allclose(missing_proportions([s_max, 0, -s_max], s_max),
                                   [0.4, 0.695, 0.99])

    def test_missing_proportions_decrease(self):
        shifts = np.linspace(-1, 1, 50)
        assert (np.diff(missing_proportions(shifts, 1)) < 0).all()


def test_discretize():
    np.testing.assert_array_equal(discretize(np.array([-2, -1.5, 0, 1.5, 3]), breakpoints(5)),
                                  [1, 2, 3, 5, 5])


class TestRecommenderSimConfig:
    def test_defaults(self):
        config = RecommenderSimConfig()
        assert (config.n, config.p, config.rank, config.n_categories) == (300, 200, 20, 5)
        assert config.missingness is Missingness.mnar

    def test_missingness_converted(self):
        assert RecommenderSimConfig(missingness='MCAR').missingness is Missingness.mcar

    def test_unsupported_categories(self):
        pytest.raises(ValueError, RecommenderSimConfig, n_categories=4)

    def test_rank_too_large(self):
        pytest.raises(ValueError, RecommenderSimConfig, n=10, p=5, rank=6).match(
            r'rank must not exceed min\(n, p\) = 5')


class TestGenRecommender:
    @pytest.fixture
    def config(self) -> RecommenderSimConfig:
        return RecommenderSimConfig(n=60, p=40, rank=3)

    def test_shapes_and_values(self, config: RecommenderSimConfig):
        truth = gen_recommender(config, seed=0)
        assert truth.full.shape == (60, 40)
        assert set(np.unique(truth.full)) <= {1, 2, 3, 4, 5}
        assert (np.abs(truth.shifts) <= truth.s_max).all()
        assert truth.s_max == mean_shift_max(5)
        assert truth.observed.scale.max_categories == 5
        observed = truth.observed
        np.testing.assert_array_equal(observed.values, truth.full[observed.rows, observed.cols])

    def test_mnar_counts(self, config: RecommenderSimConfig):
        truth = gen_recommender(config, seed=1)
        proportions = missing_proportions(truth.shifts, truth.s_max)
        expected = [60 - min(round_half_up(proportion * 60), 59) for proportion in proportions]
        np.testing.assert_array_equal(truth.observed.observed_counts(), expected)

    def test_mcar_count(self):
        config = RecommenderSimConfig(n=60, p=40, rank=3, missingness=Missingness.mcar)
        truth = gen_recommender(config, seed=2)
        assert truth.observed.nnz == 60 * 40 - round_half_up(0.7 * 60 * 40)
        assert (truth.observed.observed_counts() > 0).all()

    def test_deterministic(self, config: RecommenderSimConfig):
        first = gen_recommender(config, seed=3)
        second = gen_recommender(config, seed=3)
        np.testing.assert_array_equal(first.full, second.full)
        np.testing.assert_array_equal(first.shifts, second.shifts)
        assert first.observed == second.observed

    def test_config_seed(self):
        config = RecommenderSimConfig(n=20, p=10, rank=2, seed=9)
        np.testing.assert_array_equal(gen_recommender(config).full,
                                      gen_recommender(config, seed=9).full)

    def test_inject_mnar(self, config: RecommenderSimConfig):
        truth = gen_recommender(config, seed=4)
        observed = inject_mnar(truth, seed=5)
        np.testing.assert_array_equal(observed.observed_counts(),
                                      truth.observed.observed_counts())

    def test_inject_mcar(self, config: RecommenderSimConfig):
        truth = gen_recommender(config, seed=4)
        assert inject_mcar(truth, 0.5, seed=5).nnz == 1200
        pytest.raises(ValueError, inject_mcar, truth, 1.0).match('strictly between 0 and 1')

    @pytest.mark.slow
    def test_latent_variance(self):
        variances = [gen_recommender(RecommenderSimConfig(), seed=seed).latent.var()
                     for seed in range(5)]
        assert np.mean(variances) == pytest.approx(1, abs=0.05)

    @pytest.mark.slow
    def test_mnar_shares(self):
        truth = gen_recommender(RecommenderSimConfig(n=2000, p=50, rank=5), seed=6)
        shares = 1 - truth.observed.observed_counts() / 2000
        proportions = missing_proportions(truth.shifts, truth.s_max)
        np.testing.assert_allclose(shares, np.minimum(proportions, 1999 / 2000), atol=1e-3)


class TestSurveySimConfig:
    def test_p(self):
        assert SurveySimConfig(constructs=3, items_per_construct=6).p == 18

    def test_odd_items(self):
        pytest.raises(ValueError, SurveySimConfig, items_per_construct=3).match(
            'items_per_construct must be even')

    def test_too_few_categories(self):
        pytest.raises(ValueError, SurveySimConfig, n_categories=1)

    @pytest.mark.parametrize('field', ['abandonment', 'careless'])
    def test_invalid_fraction(self, field):
        pytest.raises(ValueError, SurveySimConfig, **{field: 1.0})


def test_correlation_matrix():
    sigma = correlation_matrix(3, 2)
    assert sigma.shape == (6, 6)
    np.testing.assert_array_equal(np.diag(sigma), 1)
    assert sigma[0, 1] == pytest.approx(0.6)
    assert sigma[0, 2] == pytest.approx(0.36)
    assert sigma[1, 5] == pytest.approx(0.216)
    np.testing.assert_array_equal(sigma, sigma.T)
    assert np.linalg.eigvalsh(sigma).min() > 0


class TestGenSurvey:
    @pytest.fixture
    def config(self) -> SurveySimConfig:
        return SurveySimConfig(n=100, constructs=3, items_per_construct=4, n_categories=5,
                               abandonment=0.3, careless=0.2)

    def test_layout(self, config: SurveySimConfig):
        truth = gen_survey(config, seed=0)
        assert truth.full.shape == (100, 12)
        assert sorted(truth.permutation) == list(range(12))
        np.testing.assert_array_equal(np.bincount(truth.constructs), [4, 4, 4])
        np.testing.assert_array_equal(np.bincount(truth.constructs[truth.reverse_keyed]),
                                      [2, 2, 2])
        assert set(np.unique(truth.full)) <= {1, 2, 3, 4, 5}

    def test_reverse_keying(self, config: SurveySimConfig):
        truth = gen_survey(config, seed=1)
        unreversed = discretize(truth.latent + truth.shifts, breakpoints(5, Design.survey))
        reverse_keyed = truth.reverse_keyed
        np.testing.assert_array_equal(truth.full[:, reverse_keyed],
                                      6 - unreversed[:, reverse_keyed])
        np.testing.assert_array_equal(truth.full[:, ~reverse_keyed],
                                      unreversed[:, ~reverse_keyed])

    def test_shifts_shared_within_constructs(self, config: SurveySimConfig):
        truth = gen_survey(config, seed=2)
        for construct in range(3):
            assert np.unique(truth.shifts[truth.constructs == construct]).size == 1

        assert ((truth.shifts >= 0) & (truth.shifts <= truth.s_max)).all()

    def test_abandonment_pattern(self, config: SurveySimConfig):
        observed = gen_survey(config, seed=3).observed
        mask = observed.mask()
        answered = mask.sum(axis=1)
        for row in range(100):
            np.testing.assert_array_equal(np.flatnonzero(mask[row]), np.arange(answered[row]))

        assert (answered < 12).sum() == 30

    def test_careless_respondents(self, config: SurveySimConfig):
        truth = gen_survey(config, seed=4)
        assert len(truth.careless_rows) == 20
        dense = truth.observed.to_dense()
        careless = dense[sorted(truth.careless_rows)]
        assert set(np.unique(careless[~np.isnan(careless)])) <= {1, 5}

    def test_deterministic(self, config: SurveySimConfig):
        first = gen_survey(config, seed=5)
        second = gen_survey(config, seed=5)
        assert first.observed == second.observed
        assert first.careless_rows == second.careless_rows
        np.testing.assert_array_equal(first.permutation, second.permutation)

    def test_within_construct_correlation(self):
        truth = gen_survey(SurveySimConfig(n=3000, abandonment=0), seed=6)
        latent = truth.latent[:, np.argsort(truth.permutation)]
        correlations = np.corrcoef(latent, rowvar=False)
        within = [correlations[k * 4 + i, k * 4 + j]
                  for k in range(10) for i in range(4) for j in range(i + 1, 4)]
        assert np.mean(within) == pytest.approx(0.6, abs=0.05)


class TestInjections:
    @pytest.fixture
    def complete(self) -> SparseRatingMatrix:
        return SparseRatingMatrix.from_dense(np.full((50, 6), 3.0), 5)

    def test_abandonment(self, complete: SparseRatingMatrix):
        observed = inject_abandonment(complete, 0.2, seed=0)
        assert (observed.row_counts() < 6).sum() == 10

    def test_no_abandonment(self, complete: SparseRatingMatrix):
        assert inject_abandonment(complete, 0, seed=0) == complete

    def test_careless(self, complete: SparseRatingMatrix):
        modified, careless = inject_careless(complete, 0.1, seed=0)
        assert len(careless) == 5
        dense = modified.to_dense()
        assert set(np.unique(dense[sorted(careless)])) <= {1, 5}
        others = np.setdiff1d(np.arange(50), sorted(careless))
        assert (dense[others] == 3).all()

    @pytest.mark.parametrize('func', [inject_abandonment, inject_careless],
                             ids=['abandonment', 'careless'])
    def test_invalid_fraction(self, complete: SparseRatingMatrix, func):
        pytest.raises(ValueError, func, complete, 1.0).match(r'must lie in \[0, 1\)')
