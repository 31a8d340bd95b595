"""Column-wise imputation baselines."""
from __future__ import annotations

from typing import List, Sequence

import numpy as np

from ..abc import Completer
from ..exceptions import EmptyColumnError
from ..ratings import column_medians
from ..structures import Fit, SparseRatingMatrix
from ..util import SeedLike, as_generator


def _missing_rows(matrix: SparseRatingMatrix, column: int) -> np.ndarray:
    observed = np.zeros(matrix.n, dtype=bool)
    observed[matrix.column(column)[0]] = True
    return np.flatnonzero(~observed)


def median_impute(matrix: SparseRatingMatrix) -> np.ndarray:
    """
    Fill every unobserved cell with the median of its column.

    Medians of columns with an even number of entries may lie halfway between two categories.

    :raises EmptyColumnError: if a column has no observed entries
    """
    medians = column_medians(matrix)
    completed = np.repeat(medians[None, :], matrix.n, axis=0)
    completed[matrix.rows, matrix.cols] = matrix.values
    return completed


def median_impute_discretized(matrix: SparseRatingMatrix, seed: SeedLike = None) -> np.ndarray:
    """
    Fill every unobserved cell with the median of its column, resolving medians between two
    categories by a fair coin flip per cell.
    """
    rng = as_generator(seed)
    medians = column_medians(matrix)
    scale = matrix.scale
    completed = matrix.to_dense()
    on_grid = scale.contains(np.arange(matrix.p), medians)
    for j in range(matrix.p):
        rows = _missing_rows(matrix, j)
        if on_grid[j]:
            completed[rows, j] = medians[j]
        else:
            lower = np.floor(medians[j] + scale.offsets[j]) - scale.offsets[j]
            completed[rows, j] = lower + (rng.random(rows.size) < 0.5)

    return completed


def column_modes(matrix: SparseRatingMatrix, column: int) -> np.ndarray:
    """
    Return the most frequent observed categories of a column in ascending order.

    :raises EmptyColumnError: if the column has no observed entries
    """
    _, values = matrix.column(column)
    if not values.size:
        raise EmptyColumnError(column)

    scale = matrix.scale
    levels = np.rint(scale.category_index(column, values)).astype(np.int64)
    counts = np.bincount(levels, minlength=scale.n_categories[column] + 1)[1:]
    return np.flatnonzero(counts == counts.max()) + 1 - scale.offsets[column]


def mode_impute(matrix: SparseRatingMatrix, seed: SeedLike = None) -> np.ndarray:
    """
    Fill every unobserved cell with the most frequent observed category of its column.

    Tied modes are listed in ascending order and sampled uniformly for every missing cell.
    """
    rng = as_generator(seed)
    completed = matrix.to_dense()
    for j in range(matrix.p):
        modes = column_modes(matrix, j)
        rows = _missing_rows(matrix, j)
        completed[rows, j] = modes[0] if modes.size == 1 else rng.choice(modes, rows.size)

    return completed


class MedianImputer(Completer):
    """Median imputation."""

    def __init__(self):
        self.name = 'median'

    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        predictions = median_impute(matrix)
        return [Fit(self.name, predictions, predictions)]


class DiscretizedMedianImputer(Completer):
    """Median imputation with medians between two categories resolved at random."""

    def __init__(self, seed: SeedLike = None):
        self.name = 'median-discretized'
        self.seed = seed

    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        predictions = median_impute_discretized(matrix, self.seed)
        return [Fit(self.name, predictions, predictions)]


class ModeImputer(Completer):
    """Mode imputation with ties resolved at random."""

    def __init__(self, seed: SeedLike = None):
        self.name = 'mode'
        self.seed = seed

    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        predictions = mode_impute(matrix, self.seed)
        return [Fit(self.name, predictions, predictions)]


__all__ = ('DiscretizedMedianImputer', 'MedianImputer', 'ModeImputer', 'column_modes',
           'median_impute', 'median_impute_discretized', 'mode_impute')
