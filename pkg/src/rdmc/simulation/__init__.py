"""
Synthetic rating data.

Latent normal data are shifted per column and cut at fixed breakpoints into ordered categories
``1, ..., K``.
"""
import numpy as np
from scipy.stats import norm

from ..enums import Design

#: breakpoints of the recommender design, by number of categories
RECOMMENDER_BREAKPOINTS = {
    3: (0.0, 1.5),
    5: (-1.5, -0.5, 0.5, 1.5),
    10: (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
}

#: share of ratings expected below the top breakpoint in the most shifted column
TOP_CATEGORY_QUANTILE = 0.6


def breakpoints(n_categories: int, design: Design = Design.recommender) -> np.ndarray:
    """
    Return the ascending breakpoints between the rating categories.

    The recommender design supports 3, 5 or 10 categories. The survey design places ``K - 1``
    unit-spaced breakpoints symmetrically around zero.

    :raises ValueError: if the recommender design does not support ``n_categories``
    """
    design = Design(design)
    if design is Design.survey:
        if n_categories < 2:
            raise ValueError('At least two categories are required')

        return np.arange(1, n_categories) - n_categories / 2

    try:
        return np.array(RECOMMENDER_BREAKPOINTS[n_categories])
    except KeyError:
        supported = ', '.join(str(k) for k in RECOMMENDER_BREAKPOINTS)
        raise ValueError(f'The recommender design supports {supported} categories, got '
                         f'{n_categories}') from None


def mean_shift_max(n_categories: int, design: Design = Design.recommender) -> float:
    """
    Return the largest mean shift.

    A standard normal latent variable shifted by this amount exceeds the top breakpoint with
    probability 0.4.
    """
    return float(breakpoints(n_categories, design)[-1] - norm.ppf(TOP_CATEGORY_QUANTILE))


def discretize(latent: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """Map latent values to categories ``1, ..., len(cuts) + 1``."""
    return (np.digitize(latent, cuts) + 1).astype(float)


from .recommender import (  # noqa: E402
    RecommenderSimConfig, gen_recommender, inject_mcar, inject_mnar, missing_proportions)
from .survey import (  # noqa: E402
    SurveySimConfig, correlation_matrix, gen_survey, inject_abandonment, inject_careless)

__all__ = ('RECOMMENDER_BREAKPOINTS', 'RecommenderSimConfig', 'SurveySimConfig', 'breakpoints',
           'correlation_matrix', 'discretize', 'gen_recommender', 'gen_survey',
           'inject_abandonment', 'inject_careless', 'inject_mcar', 'inject_mnar',
           'mean_shift_max', 'missing_proportions')
