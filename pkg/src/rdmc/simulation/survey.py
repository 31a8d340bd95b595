"""
The survey design.

Respondents answer ``q`` constructs of ``r`` items each. Items of the same construct are
strongly correlated, half of them are reverse-keyed and all items are asked in one shared random
order. Some respondents abandon the survey partway and some answer carelessly with the extreme
categories.
"""
from __future__ import annotations

import logging
from typing import FrozenSet, Optional, Tuple

import attr
import numpy as np
from scipy import linalg

from ..enums import Design
from ..structures import RatingScale, SimTruth, SparseRatingMatrix
from ..util import SeedLike, as_generator, round_half_up
from ..validators import half_open_fraction, positive_number
from . import breakpoints, discretize, mean_shift_max

logger = logging.getLogger(__name__)

#: correlation between items of the same construct; adjacent constructs get its square etc.
BASE_CORRELATION = 0.6


@attr.define(frozen=True, kw_only=True)
class SurveySimConfig:
    """
    Parameters of the survey design.

    :param n: number of respondents
    :param constructs: number of latent constructs ``q``
    :param items_per_construct: number of items ``r`` per construct (even)
    :param n_categories: number of answer categories
    :param abandonment: share of respondents who stop answering at some item
    :param careless: share of respondents answering with the extreme categories at random
    :param seed: default seed of :func:`gen_survey`
    """

    n: int = attr.field(default=300, validator=positive_number)
    constructs: int = attr.field(default=10, validator=positive_number)
    items_per_construct: int = attr.field(default=4, validator=positive_number)
    n_categories: int = attr.field(default=5)
    abandonment: float = attr.field(default=0.2, validator=half_open_fraction)
    careless: float = attr.field(default=0.0, validator=half_open_fraction)
    seed: Optional[int] = None

    @items_per_construct.validator
    def _check_items(self, attribute, value) -> None:
        if value % 2:
            raise ValueError('items_per_construct must be even so that half of the items can be '
                             'reverse-keyed')

    @n_categories.validator
    def _check_categories(self, attribute, value) -> None:
        if value < 2:
            raise ValueError('n_categories must be at least 2')

    @property
    def p(self) -> int:
        return self.constructs * self.items_per_construct


def correlation_matrix(constructs: int, items_per_construct: int,
                       base: float = BASE_CORRELATION) -> np.ndarray:
    """
    Return the block Toeplitz correlation matrix of the latent item responses.

    Items of constructs ``k`` and ``l`` correlate with ``base ** (|k - l| + 1)``.
    """
    blocks = linalg.toeplitz(base ** (np.arange(constructs) + 1.0))
    sigma = np.kron(blocks, np.ones((items_per_construct, items_per_construct)))
    np.fill_diagonal(sigma, 1.0)
    return sigma


def inject_abandonment(matrix: SparseRatingMatrix, fraction: float,
                       seed: SeedLike = None) -> SparseRatingMatrix:
    """
    Let ``round(fraction * n)`` respondents abandon the survey.

    Each abandoning respondent stops at a uniformly chosen item; that item and every later one
    (in survey order, i.e. column order) become missing.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f'fraction must lie in [0, 1), got {fraction}')

    rng = as_generator(seed)
    abandoning = rng.choice(matrix.n, round_half_up(fraction * matrix.n), replace=False)
    stop = np.full(matrix.n, matrix.p)
    stop[abandoning] = rng.integers(0, matrix.p, abandoning.size)
    return matrix.select(matrix.cols < stop[matrix.rows])


def inject_careless(matrix: SparseRatingMatrix, fraction: float,
                    seed: SeedLike = None) -> Tuple[SparseRatingMatrix, FrozenSet[int]]:
    """
    Replace the answers of ``round(fraction * n)`` respondents by careless ones.

    Every observed answer of a careless respondent becomes the lowest or highest category of its
    item with equal probability.

    :return: the modified matrix and the indexes of the careless rows
    """
    if not 0 <= fraction < 1:
        raise ValueError(f'fraction must lie in [0, 1), got {fraction}')

    rng = as_generator(seed)
    careless = np.sort(rng.choice(matrix.n, round_half_up(fraction * matrix.n), replace=False))
    affected = np.flatnonzero(np.isin(matrix.rows, careless))
    cols = matrix.cols[affected]
    values = matrix.values.copy()
    values[affected] = np.where(rng.random(affected.size) < 0.5, matrix.scale.minimum[cols],
                                matrix.scale.maximum[cols])
    return matrix.with_values(values), frozenset(int(row) for row in careless)


def gen_survey(config: SurveySimConfig, seed: SeedLike = None) -> SimTruth:
    """
    Simulate survey responses with abandonment and careless respondents.

    :param config: design parameters
    :param seed: seed of the simulation (``config.seed`` by default)
    """
    rng = as_generator(config.seed if seed is None else seed)
    q, r, n, p = config.constructs, config.items_per_construct, config.n, config.p
    k = config.n_categories
    latent = rng.multivariate_normal(np.zeros(p), correlation_matrix(q, r), size=n,
                                     method='cholesky')

    s_max = mean_shift_max(k, Design.survey)
    shifts = np.repeat(rng.uniform(0, s_max, q), r)
    responses = discretize(latent + shifts, breakpoints(k, Design.survey))

    reverse_keyed = np.zeros(p, dtype=bool)
    for construct in range(q):
        reverse_keyed[construct * r + rng.choice(r, r // 2, replace=False)] = True

    responses[:, reverse_keyed] = k + 1 - responses[:, reverse_keyed]

    permutation = rng.permutation(p)
    full = responses[:, permutation]
    complete = SparseRatingMatrix.from_dense(full, RatingScale.uniform(k, p))
    observed = inject_abandonment(complete, config.abandonment, rng)
    observed, careless_rows = inject_careless(observed, config.careless, rng)
    logger.debug('Simulated %d survey respondents on %d items (%d observed answers, %d careless '
                 'respondents)', n, p, observed.nnz, len(careless_rows))

    full.setflags(write=False)
    return SimTruth(full=full, shifts=shifts[permutation], observed=observed, s_max=s_max,
                    careless_rows=careless_rows, permutation=permutation,
                    constructs=np.repeat(np.arange(q), r)[permutation],
                    reverse_keyed=reverse_keyed[permutation], latent=latent[:, permutation])
