"""Regularization grids and repeated holdout selection of the regularization parameter."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .abc import Completer
from .ratings import holdout_masks
from .structures import Diagnostics, Fit, MaskSplit, SparseRatingMatrix
from .util import SeedLike

logger = logging.getLogger(__name__)

#: number of points in the regularization grid
GRID_SIZE = 10
#: smallest grid point relative to the largest singular value
GRID_LOWER = 0.01


def lambda_grid(projected: np.ndarray, size: int = GRID_SIZE,
                lower: float = GRID_LOWER) -> np.ndarray:
    """
    Return a logarithmic grid of regularization parameters.

    The grid runs from ``lower * sigma`` to ``sigma`` where ``sigma`` is the largest singular
    value of ``projected``.

    :param projected: the centered training matrix with zeros at unobserved cells
    :raises ValueError: if the matrix is empty or has no nonzero singular value
    """
    projected = np.asarray(projected, dtype=float)
    if not projected.size:
        raise ValueError('Cannot build a regularization grid for an empty matrix')

    sigma_max = linalg.svdvals(projected)[0]
    if sigma_max <= 0:
        raise ValueError('The largest singular value of the training matrix is zero; cannot '
                         'scale the regularization grid')

    return np.logspace(np.log10(lower), 0, size) * sigma_max


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """
    Outcome of repeated holdout validation.

    :param method: name of the validated method
    :param lambdas: the ascending grid of regularization parameters
    :param losses: ``(replications, len(lambdas))`` array of mean validation losses per held-out
        entry
    :param diagnostics: solver diagnostics of every replication and regularization parameter
    """

    method: str
    lambdas: np.ndarray
    losses: np.ndarray
    diagnostics: Tuple[Tuple[Diagnostics, ...], ...] = ()

    @property
    def replications(self) -> int:
        return self.losses.shape[0]

    @property
    def mean_losses(self) -> np.ndarray:
        return self.losses.mean(axis=0)

    @property
    def selected_index(self) -> int:
        # argmin returns the first minimum, which is the smaller lambda on an ascending grid
        return int(np.argmin(self.mean_losses))

    @property
    def selected_lambda(self) -> float:
        return float(self.lambdas[self.selected_index])

    def records(self) -> Iterator[Dict[str, Any]]:
        """Yield one tidy record per replication and regularization parameter."""
        for replication, row in enumerate(self.losses):
            for lambda_, loss in zip(self.lambdas, row):
                yield {'method': self.method, 'replication': replication,
                       'lambda': float(lambda_), 'loss': float(loss)}

    def diagnostic_records(self) -> Iterator[Dict[str, Any]]:
        """Yield the solver diagnostics of every validation fit as tidy records."""
        for replication, fits in enumerate(self.diagnostics):
            for diagnostics in fits:
                yield {'method': self.method, 'replication': replication,
                       **diagnostics.as_record()}


def validation_losses(method: Completer, split: MaskSplit,
                      lambdas: Sequence[float]) -> Tuple[np.ndarray, List[Diagnostics]]:
    """
    Fit the regularization path on the training part of ``split`` and score the held-out part.

    :return: the mean validation loss per held-out entry for every regularization parameter, and
        the diagnostics of the fits
    """
    loss = method.validation_loss
    if loss is None:
        raise TypeError(f'{method.name} has no validation loss')

    test = split.test
    fits = method.fit_path(split.train, lambdas)
    losses = np.array([loss.matrix_loss(fit.scores[test.rows, test.cols] - test.values) /
                       test.nnz for fit in fits])
    return losses, [fit.diagnostics for fit in fits if fit.diagnostics is not None]


def select_lambda(method: Completer, matrix: SparseRatingMatrix,
                  grid: Optional[Sequence[float]] = None, replications: int = 5,
                  fraction: float = 0.1, seed: SeedLike = None,
                  max_workers: Optional[int] = None) -> ValidationReport:
    """
    Select the regularization parameter of ``method`` by repeated holdout validation.

    Every replication holds out ``fraction`` of the observed training entries, fits the whole
    grid on the remaining entries and scores the held-out ones with the method's validation
    loss on the original rating scale.

    :param grid: ascending candidate values (by default the method's grid for ``matrix``)
    :param replications: number of holdout replications
    :param fraction: share of the observed entries held out in every replication
    :param seed: seed from which the holdout masks are derived
    :param max_workers: validate replications on this many threads (sequentially if ``None``
        or 1)
    """
    lambdas = np.asarray(method.lambda_grid(matrix) if grid is None else grid, dtype=float)
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError('The regularization grid must be strictly increasing')

    splits = holdout_masks(matrix, fraction, replications, seed)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers, thread_name_prefix='rdmc-holdout') as executor:
            results = list(executor.map(lambda split: validation_losses(method, split, lambdas),
                                        splits))
    else:
        results = [validation_losses(method, split, lambdas) for split in splits]

    report = ValidationReport(method.name, lambdas, np.vstack([losses for losses, _ in results]),
                              tuple(tuple(diagnostics) for _, diagnostics in results))
    logger.info('Selected lambda=%g for %s (mean validation loss %.6g)',
                report.selected_lambda, method.name, report.mean_losses[report.selected_index])
    return report


def fit_selected(method: Completer, matrix: SparseRatingMatrix, replications: int = 5,
                 fraction: float = 0.1, seed: SeedLike = None,
                 max_workers: Optional[int] = None,
                 report: Optional[ValidationReport] = None
                 ) -> Tuple[Fit, Optional[ValidationReport]]:
    """
    Fit ``method`` on the full training matrix, selecting its regularization parameter first.

    Untuned methods are fitted directly. A ``report`` from an earlier selection is reused
    instead of validating again.

    :return: the fit and the validation report (``None`` for untuned methods)
    """
    if not method.tunable:
        return method.fit(matrix), None

    if report is None:
        report = select_lambda(method, matrix, replications=replications, fraction=fraction,
                               seed=seed, max_workers=max_workers)

    return method.fit(matrix, report.selected_lambda), report


__all__ = ('GRID_LOWER', 'GRID_SIZE', 'ValidationReport', 'fit_selected', 'lambda_grid',
           'select_lambda', 'validation_losses')
