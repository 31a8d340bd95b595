"""Evaluation metrics on sets of matrix cells."""
from typing import Tuple

import numpy as np

Cells = Tuple[np.ndarray, np.ndarray]


def mae(truth: np.ndarray, predictions: np.ndarray, cells: Cells) -> float:
    """
    Return the mean absolute error over the given cells.

    :param truth: the true complete matrix
    :param predictions: the predicted matrix
    :param cells: row and column indexes of the evaluated cells
    :raises ValueError: if ``cells`` is empty
    """
    rows, cols = cells
    if not np.size(rows):
        raise ValueError('Cannot compute the MAE over an empty set of cells')

    return float(np.mean(np.abs(np.asarray(truth)[rows, cols] -
                                np.asarray(predictions)[rows, cols])))


def mps(before: np.ndarray, after: np.ndarray, target: int, rows: np.ndarray) -> float:
    """
    Return the mean prediction shift of the target column.

    Negative values mean that the attack lowered the predictions.

    :param before: predictions from the original matrix
    :param after: predictions from the attacked matrix (fake rows may follow the original ones)
    :param target: the attacked column
    :param rows: rows whose target cell was unobserved in the original matrix
    :raises ValueError: if ``rows`` is empty
    """
    rows = np.asarray(rows, dtype=np.int64)
    if not rows.size:
        raise ValueError('Cannot compute the MPS over an empty set of cells')

    return float(np.mean(np.asarray(after)[rows, target] - np.asarray(before)[rows, target]))
