"""
The recommender system design.

Ratings come from a rank ``q`` signal plus noise, rescaled to unit variance, with a random
mean shift per item. Popular items (large shifts) are observed more often under MNAR
missingness.
"""
from __future__ import annotations

import logging
from typing import Optional

import attr
import numpy as np

from ..enums import Design, Missingness
from ..ratings import repair_empty_columns
from ..structures import RatingScale, SimTruth, SparseRatingMatrix
from ..util import SeedLike, as_generator, round_half_up
from ..validators import as_enum, open_fraction, positive_number
from . import breakpoints, discretize, mean_shift_max

logger = logging.getLogger(__name__)

#: missing proportion of the most popular item under MNAR missingness
MNAR_LOWER = 0.4
#: missing proportion of the least popular item under MNAR missingness
MNAR_UPPER = 0.99


@attr.define(frozen=True, kw_only=True)
class RecommenderSimConfig:
    """
    Parameters of the recommender system design.

    :param n: number of users (rows)
    :param p: number of items (columns)
    :param rank: rank ``q`` of the latent signal
    :param n_categories: number of rating categories (3, 5 or 10)
    :param missingness: ``MNAR`` (popularity driven) or ``MCAR``
    :param mcar_fraction: share of cells removed under MCAR missingness
    :param seed: default seed of :func:`gen_recommender`
    """

    n: int = attr.field(default=300, validator=positive_number)
    p: int = attr.field(default=200, validator=positive_number)
    rank: int = attr.field(default=20, validator=positive_number)
    n_categories: int = attr.field(default=5, validator=attr.validators.in_((3, 5, 10)))
    missingness: Missingness = attr.field(default=Missingness.mnar,
                                          converter=as_enum(Missingness))
    mcar_fraction: float = attr.field(default=0.7, validator=open_fraction)
    seed: Optional[int] = None

    @rank.validator
    def _check_rank(self, attribute, value) -> None:
        if value > min(self.n, self.p):
            raise ValueError(f'rank must not exceed min(n, p) = {min(self.n, self.p)}')


def missing_proportions(shifts: np.ndarray, s_max: float) -> np.ndarray:
    """Map mean shifts in ``[-s_max, s_max]`` linearly onto missing proportions in [0.4, 0.99]."""
    shifts = np.asarray(shifts, dtype=float)
    return MNAR_LOWER + (MNAR_UPPER - MNAR_LOWER) * (s_max - shifts) / (2 * s_max)


def _observed(full: np.ndarray, removed: np.ndarray,
              scale: RatingScale) -> SparseRatingMatrix:
    rows, cols = np.nonzero(~removed)
    return SparseRatingMatrix(full.shape[0], full.shape[1], rows, cols, full[rows, cols], scale)


def _mnar_mask(shifts: np.ndarray, s_max: float, n: int,
               rng: np.random.Generator) -> np.ndarray:
    removed = np.zeros((n, shifts.size), dtype=bool)
    for j, proportion in enumerate(missing_proportions(shifts, s_max)):
        # keep at least one rating per item
        count = min(round_half_up(proportion * n), n - 1)
        removed[rng.choice(n, count, replace=False), j] = True

    return removed


def _mcar_mask(n: int, p: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    held_out = np.zeros(n * p, dtype=bool)
    held_out[rng.permutation(n * p)[:round_half_up(fraction * n * p)]] = True
    repair_empty_columns(np.tile(np.arange(p), n), held_out, p, rng)
    return held_out.reshape(n, p)


def inject_mnar(truth: SimTruth, seed: SeedLike = None) -> SparseRatingMatrix:
    """
    Remove ratings with item-specific missing proportions that decrease with the mean shift.

    Item ``j`` loses ``round(pi_j * n)`` uniformly chosen ratings (but keeps at least one).
    """
    removed = _mnar_mask(truth.shifts, truth.s_max, truth.full.shape[0], as_generator(seed))
    return _observed(truth.full, removed, truth.observed.scale)


def inject_mcar(truth: SimTruth, fraction: float = 0.7,
                seed: SeedLike = None) -> SparseRatingMatrix:
    """
    Remove ``round(fraction * n * p)`` uniformly chosen ratings.

    Items that would lose all of their ratings get one back in exchange for a rating of another
    item.
    """
    if not 0 < fraction < 1:
        raise ValueError(f'fraction must lie strictly between 0 and 1, got {fraction}')

    n, p = truth.full.shape
    return _observed(truth.full, _mcar_mask(n, p, fraction, as_generator(seed)),
                     truth.observed.scale)


def gen_recommender(config: RecommenderSimConfig, seed: SeedLike = None) -> SimTruth:
    """
    Simulate a rating matrix of the recommender system design.

    :param config: design parameters
    :param seed: seed of the simulation (``config.seed`` by default)
    """
    rng = as_generator(config.seed if seed is None else seed)
    n, p, q = config.n, config.p, config.rank
    a = rng.standard_normal((n, q))
    b = rng.standard_normal((p, q))
    noise = rng.standard_normal((n, p))
    latent = (a @ b.T + noise) / np.sqrt(q + 1)

    s_max = mean_shift_max(config.n_categories, Design.recommender)
    shifts = rng.uniform(-s_max, s_max, p)
    full = discretize(latent + shifts, breakpoints(config.n_categories, Design.recommender))
    if config.missingness is Missingness.mnar:
        removed = _mnar_mask(shifts, s_max, n, rng)
    else:
        removed = _mcar_mask(n, p, config.mcar_fraction, rng)

    observed = _observed(full, removed, RatingScale.uniform(config.n_categories, p))
    logger.debug('Simulated a %dx%d recommender matrix with %d observed ratings', n, p,
                 observed.nnz)
    full.setflags(write=False)
    shifts.setflags(write=False)
    return SimTruth(full=full, shifts=shifts, observed=observed, s_max=s_max, latent=latent)
