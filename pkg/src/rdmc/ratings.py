"""Centering, completion assembly and random splits of sparse rating matrices."""
from __future__ import annotations

import logging
from typing import List

import numpy as np

from .exceptions import EmptyColumnError, OffGridError
from .structures import CenteredMatrix, MaskSplit, SparseRatingMatrix
from .util import SeedLike, as_generator, round_half_up, spawn_seeds
from .validators import as_positive_integer

logger = logging.getLogger(__name__)


def column_medians(matrix: SparseRatingMatrix) -> np.ndarray:
    """
    Return the median of the observed values of every column.

    Even counts use the mean of the two middle order statistics, so medians may fall halfway
    between two categories.

    :raises EmptyColumnError: if a column has no observed entries
    """
    medians = np.empty(matrix.p)
    for j in range(matrix.p):
        _, values = matrix.column(j)
        if not values.size:
            raise EmptyColumnError(j)

        medians[j] = np.median(values)

    return medians


def center(matrix: SparseRatingMatrix) -> CenteredMatrix:
    """Subtract the median of every column from its observed values."""
    medians = column_medians(matrix)
    values = matrix.values - medians[matrix.cols]
    values.setflags(write=False)
    medians.setflags(write=False)
    return CenteredMatrix(matrix, values, medians)


def assemble_completion(completed: np.ndarray, centered: CenteredMatrix,
                        matrix: SparseRatingMatrix) -> np.ndarray:
    """
    Map a completed centered matrix back to the original rating scale.

    Observed cells keep their observed rating, all other cells receive ``L_ij + M_j``.

    :param completed: dense centered matrix whose cells all lie on the centered category grid
    :param centered: the centered training matrix ``completed`` was fitted on
    :param matrix: the matrix whose observed cells are copied verbatim
    :raises OffGridError: if a cell of ``completed`` is not one of its column's categories
    """
    completed = np.asarray(completed, dtype=float)
    if completed.shape != centered.shape:
        raise ValueError(f'Expected a matrix of shape {centered.shape}, got {completed.shape}')

    rows, cols = np.indices(completed.shape).reshape(2, -1)
    on_grid = centered.scale.contains(cols, completed.reshape(-1))
    if not on_grid.all():
        bad = np.flatnonzero(~on_grid)[0]
        raise OffGridError(int(rows[bad]), int(cols[bad]), float(completed.reshape(-1)[bad]))

    result = completed + centered.medians[None, :]
    result[matrix.rows, matrix.cols] = matrix.values
    return result


def repair_empty_columns(cols: np.ndarray, held_out: np.ndarray, p: int,
                          rng: np.random.Generator) -> None:
    """
    Make sure every column that has entries keeps at least one of them.

    For every emptied column, one of its held-out entries is moved back and a random kept entry
    of a column with at least two kept entries is held out instead, preserving the counts.
    Modifies ``held_out`` in place.
    """
    kept_counts = np.bincount(cols[~held_out], minlength=p)
    total_counts = np.bincount(cols, minlength=p)
    for j in np.flatnonzero((kept_counts == 0) & (total_counts > 0)):
        restored = rng.choice(np.flatnonzero(held_out & (cols == j)))
        held_out[restored] = False
        kept_counts[j] += 1
        donors = np.flatnonzero(~held_out & (kept_counts[cols] >= 2))
        if donors.size:
            dropped = rng.choice(donors)
            held_out[dropped] = True
            kept_counts[cols[dropped]] -= 1
            logger.warning('Column %d lost all of its kept entries; swapped entry %d back for '
                           'entry %d of column %d', j, restored, dropped, cols[dropped])
        else:
            logger.warning('Column %d lost all of its kept entries; moved entry %d back',
                           j, restored)


def split_train_test(matrix: SparseRatingMatrix, test_fraction: float,
                     seed: SeedLike = None) -> MaskSplit:
    """
    Randomly partition the observed entries into training and test entries.

    The test set receives ``round(test_fraction * nnz)`` uniformly chosen entries. If a column
    would lose all of its training entries, one of its test entries is swapped back.

    :param test_fraction: share of the observed entries to hold out, in ``(0, 1)``
    :param seed: seed (or generator) of the random partition
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f'test_fraction must lie strictly between 0 and 1, got {test_fraction}')

    rng = as_generator(seed)
    held_out = np.zeros(matrix.nnz, dtype=bool)
    held_out[rng.permutation(matrix.nnz)[:round_half_up(test_fraction * matrix.nnz)]] = True
    repair_empty_columns(matrix.cols, held_out, matrix.p, rng)
    return MaskSplit(matrix.select(~held_out), matrix.select(held_out), seed)


def holdout_masks(matrix: SparseRatingMatrix, fraction: float, replications: int,
                  seed: SeedLike = None) -> List[MaskSplit]:
    """
    Draw independent holdout splits for repeated holdout validation.

    Replication ``r`` uses the ``r``-th child of ``seed``, which is recorded as the seed of the
    returned split.
    """
    replications = as_positive_integer(replications, 'replications')
    return [split_train_test(matrix, fraction, child_seed)
            for child_seed in spawn_seeds(seed, replications)]
