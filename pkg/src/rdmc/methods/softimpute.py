"""
Soft-Impute, the continuous nuclear norm regularized completion baseline.

Each iteration fills the unobserved cells of the mean-centered matrix with the current estimate
and soft-thresholds the singular values of the result.
"""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import attr
import numpy as np

from ..abc import Completer, Loss
from ..exceptions import EmptyColumnError
from ..losses import SquaredLoss
from ..policies import StoppingPolicy
from ..ratings import center
from ..selection import lambda_grid
from ..structures import Diagnostics, Fit, RatingScale, SparseRatingMatrix
from ..util import Stopwatch, round_half_away
from ..validators import non_negative_number, positive_number
from .rdmc import shrink_singular_values

logger = logging.getLogger(__name__)


@attr.define(frozen=True, kw_only=True)
class SIConfig:
    """
    Parameters of a single Soft-Impute fit.

    :param lambda_: nuclear norm penalty
    :param threshold: convergence threshold on the relative squared change of the estimate
    :param max_iterations: maximum number of iterations
    :param centering: how the columns are centered before completion
    """

    lambda_: float = attr.field(default=0.0, validator=non_negative_number)
    threshold: float = attr.field(default=1e-4, validator=positive_number)
    max_iterations: int = attr.field(default=100, validator=[attr.validators.instance_of(int),
                                                              positive_number])
    centering: str = attr.field(default='mean', validator=attr.validators.in_(('mean',)))

    @classmethod
    def for_stopping(cls, policy: StoppingPolicy, **kwargs) -> SIConfig:
        return cls(threshold=StoppingPolicy(policy).si_threshold, **kwargs)


def _centered(matrix: SparseRatingMatrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = matrix.column_means()
    empty = np.flatnonzero(np.isnan(means))
    if empty.size:
        raise EmptyColumnError(int(empty[0]))

    projected = np.zeros(matrix.shape)
    projected[matrix.rows, matrix.cols] = matrix.values - means[matrix.cols]
    return projected, matrix.mask(), means


def si_objective(projected: np.ndarray, mask: np.ndarray, estimate: np.ndarray,
                 lambda_: float, singular_values: Optional[np.ndarray] = None) -> float:
    """Return ``1/2 ||P(X - Z)||_F^2 + lambda ||Z||_*`` for the centered estimate ``Z``."""
    if singular_values is None:
        singular_values = np.linalg.svd(estimate, compute_uv=False)

    residuals = (projected - estimate)[mask]
    return 0.5 * float(residuals @ residuals) + lambda_ * float(singular_values.sum())


def _soft_impute(projected: np.ndarray, mask: np.ndarray, config: SIConfig,
                 estimate: np.ndarray, warm_started: bool) -> Tuple[np.ndarray, Diagnostics]:
    objectives: List[float] = []
    converged = False
    iteration = 0
    with Stopwatch() as stopwatch:
        while not converged and iteration < config.max_iterations:
            iteration += 1
            filled = np.where(mask, projected, estimate)
            updated, singular_values = shrink_singular_values(filled, config.lambda_)
            change = float(np.sum((updated - estimate) ** 2))
            norm = float(np.sum(estimate ** 2))
            ratio = change / norm if norm > 0 else (0.0 if change == 0 else np.inf)
            estimate = updated
            objectives.append(si_objective(projected, mask, estimate, config.lambda_,
                                           singular_values))
            converged = ratio < config.threshold
            logger.debug('lambda=%g iteration=%d ratio=%.3g', config.lambda_, iteration, ratio)

    diagnostics = Diagnostics(
        lambda_=config.lambda_, iterations=iteration, converged=converged,
        final_loss=objectives[-1] if objectives else float('nan'),
        wall_time_ms=stopwatch.elapsed_ms, warm_started=warm_started, losses=tuple(objectives))
    return estimate, diagnostics


def si_solve(matrix: SparseRatingMatrix, config: SIConfig,
             warm_start: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Complete ``matrix`` with Soft-Impute.

    :param matrix: the training matrix (every column needs an observed entry)
    :param config: solver parameters
    :param warm_start: uncentered starting estimate
    :return: the continuous predictions with the column means added back
    """
    return si_solve_with_diagnostics(matrix, config, warm_start)[0]


def si_solve_with_diagnostics(matrix: SparseRatingMatrix, config: SIConfig,
                              warm_start: Optional[np.ndarray] = None
                              ) -> Tuple[np.ndarray, Diagnostics]:
    projected, mask, means = _centered(matrix)
    if warm_start is None:
        estimate = np.zeros(matrix.shape)
    else:
        estimate = np.asarray(warm_start, dtype=float) - means
        if estimate.shape != matrix.shape:
            raise ValueError(f'The warm start must have the shape {matrix.shape}')

    estimate, diagnostics = _soft_impute(projected, mask, config, estimate,
                                         warm_start is not None)
    return estimate + means, diagnostics


def discretize_predictions(predictions: np.ndarray, scale: RatingScale) -> np.ndarray:
    """
    Map continuous predictions to the nearest category of their column.

    Values are rounded half away from zero and clamped to the column's category range.
    """
    predictions = np.asarray(predictions, dtype=float)
    levels = np.clip(round_half_away(predictions + scale.offsets), 1, scale.n_categories)
    return levels - scale.offsets


class SoftImpute(Completer):
    """
    Soft-Impute on the mean-centered training matrix.

    The regularization path is solved from the largest to the smallest value, each fit starting
    from the previous estimate.

    :param stopping: liberal (threshold 1e-3) or strict (1e-4) stopping
    :param discretize: map the predictions to the rating categories (the validation scores stay
        continuous)
    :param config: full solver configuration, overriding ``stopping``
    """

    tunable = True
    #: methods with the same key share their regularization parameter selection
    selection_key = 'si'

    def __init__(self, stopping: StoppingPolicy = StoppingPolicy.strict,
                 discretize: bool = False, config: Optional[SIConfig] = None):
        self.name = 'si-discretized' if discretize else 'si'
        self.discretize = discretize
        self.config = config or SIConfig.for_stopping(stopping)

    @property
    def validation_loss(self) -> Loss:
        return SquaredLoss()

    def lambda_grid(self, matrix: SparseRatingMatrix) -> np.ndarray:
        # same median-centered grid as RDMC
        return lambda_grid(center(matrix).dense())

    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        if not len(lambdas):
            raise ValueError(f'{self.name} needs a regularization parameter')

        projected, mask, means = _centered(matrix)
        estimate = np.zeros(matrix.shape)
        order = np.argsort(lambdas)[::-1]
        fits: List[Optional[Fit]] = [None] * len(lambdas)
        for position, index in enumerate(order):
            config = attr.evolve(self.config, lambda_=float(lambdas[index]))
            estimate, diagnostics = _soft_impute(projected, mask, config, estimate,
                                                 position > 0)
            scores = estimate + means
            predictions = discretize_predictions(scores, matrix.scale) if self.discretize \
                else scores
            fits[index] = Fit(self.name, predictions, scores, config.lambda_, diagnostics)

        return fits  # type: ignore[return-value]

    def __repr__(self):
        return f'{self.__class__.__name__}(discretize={self.discretize}, ' \
               f'threshold={self.config.threshold})'
