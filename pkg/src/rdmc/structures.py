from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DuplicateEntryError, InvalidRatingError

_GRID_ATOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RatingScale:
    """
    Ordered rating categories of every column.

    Column ``j`` has the categories ``k - offsets[j]`` for ``k = 1, ..., n_categories[j]``, so an
    uncentered scale (all offsets zero) is ``{1, ..., K}``. Centering a column by its median ``M``
    adds ``M`` to its offset.
    """

    n_categories: np.ndarray
    offsets: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        n_categories = np.array(self.n_categories, dtype=np.int64).reshape(-1)
        if n_categories.size and n_categories.min() < 1:
            raise ValueError('Every column needs at least one rating category')

        if self.offsets is None:
            offsets = np.zeros(n_categories.size)
        else:
            offsets = np.array(self.offsets, dtype=float).reshape(-1)
            if offsets.size != n_categories.size:
                raise ValueError(f'Expected {n_categories.size} offsets, got {offsets.size}')

        object.__setattr__(self, 'n_categories', _frozen(n_categories))
        object.__setattr__(self, 'offsets', _frozen(offsets))

    @classmethod
    def uniform(cls, n_categories: int, p: int) -> RatingScale:
        """Return the scale ``{1, ..., n_categories}`` for each of ``p`` columns."""
        return cls(np.full(p, n_categories, dtype=np.int64))

    @property
    def p(self) -> int:
        return self.n_categories.size

    @property
    def max_categories(self) -> int:
        return int(self.n_categories.max()) if self.p else 0

    @property
    def minimum(self) -> np.ndarray:
        """Smallest category of every column."""
        return 1 - self.offsets

    @property
    def maximum(self) -> np.ndarray:
        """Largest category of every column."""
        return self.n_categories - self.offsets

    def categories(self, column: int) -> np.ndarray:
        return np.arange(1, self.n_categories[column] + 1) - self.offsets[column]

    def grid(self) -> np.ndarray:
        """
        Return a ``(p, max_categories)`` array of every column's categories, padded with NaN for
        columns with fewer categories.
        """
        levels = np.arange(1, self.max_categories + 1, dtype=float)
        grid = levels[None, :] - self.offsets[:, None]
        grid[levels[None, :] > self.n_categories[:, None]] = np.nan
        return grid

    def category_index(self, columns: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Return the 1-based category number of each value (not necessarily an integer)."""
        return np.asarray(values, dtype=float) + self.offsets[columns]

    def contains(self, columns: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Return a boolean array telling which values are categories of their columns."""
        levels = self.category_index(columns, values)
        rounded = np.rint(levels)
        with np.errstate(invalid='ignore'):
            return (np.abs(levels - rounded) <= _GRID_ATOL) & (rounded >= 1) & \
                (rounded <= self.n_categories[columns])

    def shifted(self, amounts: np.ndarray) -> RatingScale:
        """Return the scale obtained by subtracting ``amounts[j]`` from column ``j``."""
        return RatingScale(self.n_categories, self.offsets + np.asarray(amounts, dtype=float))

    def subset(self, columns: Sequence[int]) -> RatingScale:
        columns = np.asarray(columns, dtype=np.int64)
        return RatingScale(self.n_categories[columns], self.offsets[columns])

    def __eq__(self, other) -> bool:
        if isinstance(other, RatingScale):
            return np.array_equal(self.n_categories, other.n_categories) and \
                np.allclose(self.offsets, other.offsets, rtol=0, atol=_GRID_ATOL)

        return NotImplemented

    def __repr__(self):
        levels = np.unique(self.n_categories)
        return f'{self.__class__.__name__}(p={self.p}, n_categories={levels.tolist()})'


@dataclass(frozen=True, eq=False)
class SparseRatingMatrix:
    """
    An ``n x p`` matrix of discrete ratings of which only some cells are observed.

    Observed entries are stored as coordinate arrays sorted by column and then row, with
    ``indptr`` delimiting the entries of every column (``indptr[j]:indptr[j + 1]``).

    :param n: number of rows
    :param p: number of columns
    :param rows: row index of every observed entry
    :param cols: column index of every observed entry
    :param values: value of every observed entry
    :param scale: rating categories of the columns
    """

    n: int
    p: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    scale: RatingScale
    indptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if not rows.size == cols.size == values.size:
            raise ValueError('rows, cols and values must have the same length')
        if self.scale.p != self.p:
            raise ValueError(f'The rating scale covers {self.scale.p} columns, expected {self.p}')
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n:
                raise IndexError(f'Row indexes must lie in [0, {self.n})')
            if cols.min() < 0 or cols.max() >= self.p:
                raise IndexError(f'Column indexes must lie in [0, {self.p})')

        order = np.lexsort((rows, cols))
        rows, cols, values = rows[order], cols[order], values[order]
        duplicates = np.flatnonzero((np.diff(rows) == 0) & (np.diff(cols) == 0))
        if duplicates.size:
            raise DuplicateEntryError(int(rows[duplicates[0]]), int(cols[duplicates[0]]))

        valid = self.scale.contains(cols, values)
        if not valid.all():
            bad = np.flatnonzero(~valid)[0]
            raise InvalidRatingError(int(rows[bad]), int(cols[bad]), float(values[bad]))

        indptr = np.zeros(self.p + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=self.p), out=indptr[1:])
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'p', int(self.p))
        object.__setattr__(self, 'rows', _frozen(rows))
        object.__setattr__(self, 'cols', _frozen(cols))
        object.__setattr__(self, 'values', _frozen(values))
        object.__setattr__(self, 'indptr', _frozen(indptr))

    @classmethod
    def from_dense(cls, matrix: np.ndarray,
                   scale: Union[RatingScale, int, None] = None) -> SparseRatingMatrix:
        """
        Build a sparse matrix from a dense array in which ``NaN`` marks missing cells.

        :param matrix: the dense ``n x p`` array
        :param scale: the rating scale, or the number of categories shared by all columns
            (by default the largest observed value)
        """
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError('Expected a two-dimensional array')

        rows, cols = np.nonzero(~np.isnan(matrix))
        n, p = matrix.shape
        if not isinstance(scale, RatingScale):
            if scale is None:
                scale = int(np.nanmax(matrix)) if rows.size else 1

            scale = RatingScale.uniform(scale, p)

        return cls(n, p, rows, cols, matrix[rows, cols], scale)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n, self.p

    @property
    def nnz(self) -> int:
        """Number of observed entries."""
        return self.values.size

    def column(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return the observed rows of column ``j`` and their values."""
        start, end = self.indptr[j], self.indptr[j + 1]
        return self.rows[start:end], self.values[start:end]

    def observed_counts(self) -> np.ndarray:
        """Number of observed entries in every column."""
        return np.diff(self.indptr)

    def row_counts(self) -> np.ndarray:
        """Number of observed entries in every row."""
        return np.bincount(self.rows, minlength=self.n)

    def column_means(self) -> np.ndarray:
        """Mean observed value of every column (NaN for columns without observations)."""
        counts = self.observed_counts()
        sums = np.bincount(self.cols, weights=self.values, minlength=self.p)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)

    def mask(self) -> np.ndarray:
        """Return the dense boolean matrix of observed cells."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.rows, self.cols] = True
        return mask

    def to_dense(self, fill: float = np.nan) -> np.ndarray:
        dense = np.full(self.shape, fill, dtype=float)
        dense[self.rows, self.cols] = self.values
        return dense

    def select(self, entries: np.ndarray) -> SparseRatingMatrix:
        """
        Return a matrix of the same shape holding only the given entries.

        :param entries: a boolean mask over the entries or an array of entry positions
        """
        return SparseRatingMatrix(self.n, self.p, self.rows[entries], self.cols[entries],
                                  self.values[entries], self.scale)

    def with_values(self, values: np.ndarray) -> SparseRatingMatrix:
        """Return a matrix with the same observed cells but different values."""
        return SparseRatingMatrix(self.n, self.p, self.rows, self.cols, values, self.scale)

    def append_rows(self, count: int, rows: np.ndarray, cols: np.ndarray,
                    values: np.ndarray) -> SparseRatingMatrix:
        """
        Return a matrix with ``count`` extra rows below the existing ones.

        :param rows: row indexes of the new entries, relative to the first appended row
        """
        rows = np.asarray(rows, dtype=np.int64) + self.n
        return SparseRatingMatrix(self.n + count, self.p, np.concatenate([self.rows, rows]),
                                  np.concatenate([self.cols, cols]),
                                  np.concatenate([self.values, values]), self.scale)

    def __eq__(self, other) -> bool:
        if isinstance(other, SparseRatingMatrix):
            return self.shape == other.shape and self.scale == other.scale and \
                np.array_equal(self.rows, other.rows) and \
                np.array_equal(self.cols, other.cols) and \
                np.array_equal(self.values, other.values)

        return NotImplemented

    def __repr__(self):
        return f'<{self.__class__.__name__} shape={self.shape} nnz={self.nnz}>'


@dataclass(frozen=True, eq=False)
class CenteredMatrix:
    """
    A rating matrix with every column centered by the median of its observed values.

    ``values`` holds the centered value of each entry of ``source``, in the same order.
    """

    source: SparseRatingMatrix
    values: np.ndarray
    medians: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.source.shape

    @property
    def rows(self) -> np.ndarray:
        return self.source.rows

    @property
    def cols(self) -> np.ndarray:
        return self.source.cols

    @property
    def scale(self) -> RatingScale:
        """The centered rating scale (``c_k = k - M_j`` on an uncentered source)."""
        return self.source.scale.shifted(self.medians)

    def dense(self) -> np.ndarray:
        """Return the projection onto the observed cells (zeros elsewhere)."""
        dense = np.zeros(self.shape)
        dense[self.rows, self.cols] = self.values
        return dense


@dataclass(frozen=True)
class MaskSplit:
    """A partition of the observed entries into training and held-out entries."""

    train: SparseRatingMatrix
    test: SparseRatingMatrix
    seed: Any


@dataclass(frozen=True)
class Diagnostics:
    """Convergence information about a single fit."""

    lambda_: float
    iterations: int
    converged: bool
    final_loss: float
    wall_time_ms: float
    warm_started: bool = False
    losses: Tuple[float, ...] = ()

    def as_record(self) -> Dict[str, Any]:
        return {'lambda': self.lambda_, 'iterations': self.iterations,
                'converged': self.converged, 'final_loss': self.final_loss,
                'wall_time_ms': self.wall_time_ms}


@dataclass(frozen=True, eq=False)
class Fit:
    """
    Result of fitting a completion method for one value of the regularization parameter.

    :param predictions: the complete ``n x p`` matrix on the original rating scale
    :param scores: the predictions used for validation (continuous for Soft-Impute)
    :param lambda_: the regularization parameter, or ``None`` for untuned methods
    """

    method: str
    predictions: np.ndarray
    scores: np.ndarray
    lambda_: Optional[float] = None
    diagnostics: Optional[Diagnostics] = None


@dataclass(frozen=True, eq=False)
class SimTruth:
    """
    Ground truth of a simulated data set.

    :param full: complete discrete matrix before missingness and careless responding
    :param shifts: column mean shifts
    :param observed: the observed matrix
    :param s_max: bound of the mean shifts
    :param careless_rows: rows replaced by careless respondents
    :param permutation: survey item order (``full[:, k]`` is original item ``permutation[k]``)
    :param constructs: construct label of every (permuted) survey item
    :param reverse_keyed: mask of reverse-keyed (permuted) survey items
    :param latent: latent continuous data before shifts, in the column order of ``full``
    """

    full: np.ndarray
    shifts: np.ndarray
    observed: SparseRatingMatrix
    s_max: float
    careless_rows: FrozenSet[int] = frozenset()
    permutation: Optional[np.ndarray] = None
    constructs: Optional[np.ndarray] = None
    reverse_keyed: Optional[np.ndarray] = None
    latent: Optional[np.ndarray] = None

    @property
    def n_categories(self) -> int:
        return self.observed.scale.max_categories

    def missing_cells(self, exclude_careless: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """Return the row and column indexes of the unobserved cells (in row-major order)."""
        missing = ~self.observed.mask()
        if exclude_careless and self.careless_rows:
            missing[sorted(self.careless_rows), :] = False

        return np.nonzero(missing)


@dataclass(frozen=True, eq=False)
class AttackResult:
    """
    A rating matrix augmented with fake profiles.

    :param matrix: the original rows followed by ``n_fake`` fake rows
    :param target: column index of the attacked item
    :param original_rows: number of rows of the matrix before the attack
    :param filler_columns: filler columns of every fake row
    :param selected_columns: attacker-chosen columns rated by every fake row
    """

    matrix: SparseRatingMatrix
    target: int
    n_fake: int
    original_rows: int
    filler_columns: Tuple[np.ndarray, ...]
    selected_columns: np.ndarray
