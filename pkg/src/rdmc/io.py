"""Reading and writing rating data."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import attr
import numpy as np
import pandas as pd

from .enums import DataFormat
from .exceptions import DataFormatError
from .structures import RatingScale, SparseRatingMatrix
from .validators import as_enum, non_negative_number

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_MOVIELENS_COLUMNS = ['user', 'item', 'rating', 'timestamp']
_LONG_COLUMNS = ['user', 'item', 'rating']
_PARSER_LINE_RE = re.compile(r'line (\d+)')


@dataclass(frozen=True, eq=False)
class RatingData:
    """
    A rating matrix together with the original user and item identifiers.

    Row ``i`` of ``matrix`` belongs to user ``user_ids[i]`` and column ``j`` to item
    ``item_ids[j]``.
    """

    matrix: SparseRatingMatrix
    user_ids: np.ndarray
    item_ids: np.ndarray

    def id_mapping(self) -> dict:
        """Return the mapping of matrix indexes to the original identifiers."""
        return {'users': self.user_ids.tolist(), 'items': self.item_ids.tolist()}


@attr.define(frozen=True, kw_only=True)
class DatasetDescriptor:
    """
    Describes a rating data set on disk.

    :param path: location of the file
    :param format: ``movielens-udata`` (tab separated, no header) or ``long-csv`` (delimited with a
        ``user,item,rating`` header)
    :param min_ratings: drop items with fewer observed ratings
    :param min_user_ratings: drop users with fewer observed ratings
    :param delimiter: field separator of ``long-csv`` files
    :param n_categories: number of rating categories (ratings must lie in ``1, ..., K``); inferred
        from the largest rating if omitted
    :param intersect_with: a second file in the same format; only users present in both are kept
    """

    path: str = attr.field(converter=str)
    format: DataFormat = attr.field(default=DataFormat.movielens_udata,
                                    converter=as_enum(DataFormat))
    min_ratings: int = attr.field(default=0, validator=non_negative_number)
    min_user_ratings: int = attr.field(default=0, validator=non_negative_number)
    delimiter: str = ','
    n_categories: Optional[int] = None
    intersect_with: Optional[str] = None


def _parser_error(path: PathLike, exc: Exception) -> DataFormatError:
    match = _PARSER_LINE_RE.search(str(exc))
    return DataFormatError(path, int(match.group(1)) if match else 0, str(exc).strip())


def _build(frame: pd.DataFrame, path: PathLike, first_line: int,
           n_categories: Optional[int]) -> RatingData:
    if frame.empty:
        raise DataFormatError(path, 0, 'the file contains no ratings')

    for column in ('user', 'item', 'rating'):
        frame[column] = frame[column].str.strip()

    ratings = pd.to_numeric(frame['rating'], errors='coerce')
    invalid = ratings.isna() | (frame['user'] == '') | (frame['item'] == '')
    if invalid.any():
        position = int(np.flatnonzero(invalid.to_numpy())[0])
        raise DataFormatError(path, position + first_line, 'expected user, item and a numeric '
                                                           'rating')

    values = ratings.to_numpy(dtype=float)
    upper = int(n_categories) if n_categories else int(values.max())
    bad = (values != np.round(values)) | (values < 1) | (values > upper)
    if bad.any():
        position = int(np.flatnonzero(bad)[0])
        raise DataFormatError(
            path, position + first_line,
            f'rating {values[position]:g} of user {frame["user"].iloc[position]} on item '
            f'{frame["item"].iloc[position]} is outside the scale 1..{upper}')

    duplicated = frame.duplicated(['user', 'item'], keep='last').to_numpy()
    if duplicated.any():
        logger.warning('%s: %d duplicate (user, item) pairs; keeping the last rating of each',
                       path, int(duplicated.sum()))
        frame, values = frame[~duplicated], values[~duplicated]

    rows, user_ids = pd.factorize(_as_ids(frame['user']), sort=True)
    cols, item_ids = pd.factorize(_as_ids(frame['item']), sort=True)
    scale = RatingScale.uniform(upper, len(item_ids))
    matrix = SparseRatingMatrix(len(user_ids), len(item_ids), rows, cols, values, scale)
    logger.info('Read %d ratings of %d users on %d items from %s', matrix.nnz, matrix.n,
                matrix.p, path)
    return RatingData(matrix, np.asarray(user_ids), np.asarray(item_ids))


def _as_ids(column: pd.Series) -> pd.Series:
    numeric = pd.to_numeric(column, errors='coerce')
    if numeric.notna().all() and (numeric == numeric.round()).all():
        return numeric.astype(np.int64)

    return column


def read_movielens(path: PathLike, n_categories: int = 5) -> RatingData:
    """
    Read a MovieLens ``u.data`` file (``user<TAB>item<TAB>rating<TAB>timestamp`` per line).

    Timestamps are ignored. Of duplicate (user, item) pairs the last one wins.

    :raises DataFormatError: on a malformed line or a rating outside ``1, ..., n_categories``
    """
    try:
        frame = pd.read_csv(path, sep='\t', header=None, names=_MOVIELENS_COLUMNS, dtype=str,
                            keep_default_na=False, index_col=False)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, 0, 'the file contains no ratings') from None
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc) from exc

    return _build(frame, path, 1, n_categories)


def read_long_csv(path: PathLike, descriptor: Optional[DatasetDescriptor] = None) -> RatingData:
    """
    Read a delimited file with a ``user,item,rating`` header.

    :raises DataFormatError: on a missing header column, a malformed line or a rating outside
        the scale
    """
    delimiter = descriptor.delimiter if descriptor else ','
    n_categories = descriptor.n_categories if descriptor else None
    try:
        frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, 0, 'the file contains no ratings') from None
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc) from exc

    frame.columns = [str(column).strip().lower() for column in frame.columns]
    missing = [column for column in _LONG_COLUMNS if column not in frame.columns]
    if missing:
        raise DataFormatError(path, 1, f'the header lacks the column(s) {", ".join(missing)}')

    return _build(frame[_LONG_COLUMNS].copy(), path, 2, n_categories)


def _restrict(data: RatingData, keep_rows: np.ndarray, keep_cols: np.ndarray) -> RatingData:
    matrix = data.matrix
    row_index = np.cumsum(keep_rows) - 1
    col_index = np.cumsum(keep_cols) - 1
    entries = keep_rows[matrix.rows] & keep_cols[matrix.cols]
    restricted = SparseRatingMatrix(
        int(keep_rows.sum()), int(keep_cols.sum()), row_index[matrix.rows[entries]],
        col_index[matrix.cols[entries]], matrix.values[entries],
        matrix.scale.subset(np.flatnonzero(keep_cols)))
    return RatingData(restricted, data.user_ids[keep_rows], data.item_ids[keep_cols])


def filter_min_ratings(data: RatingData, min_ratings: int,
                       min_user_ratings: int = 0) -> RatingData:
    """
    Drop items (and users) with too few observed ratings.

    With both thresholds active, the filters are applied alternately until no further item or
    user is dropped.

    :raises ValueError: if a threshold is negative or nothing remains
    """
    if min_ratings < 0 or min_user_ratings < 0:
        raise ValueError('The rating thresholds must be non-negative')

    matrix = data.matrix
    keep_rows = np.ones(matrix.n, dtype=bool)
    keep_cols = np.ones(matrix.p, dtype=bool)
    while True:
        entries = keep_rows[matrix.rows] & keep_cols[matrix.cols]
        col_counts = np.bincount(matrix.cols[entries], minlength=matrix.p)
        new_cols = keep_cols & (col_counts >= min_ratings)
        entries &= new_cols[matrix.cols]
        row_counts = np.bincount(matrix.rows[entries], minlength=matrix.n)
        new_rows = keep_rows & (row_counts >= min_user_ratings)
        if np.array_equal(new_cols, keep_cols) and np.array_equal(new_rows, keep_rows):
            break

        keep_rows, keep_cols = new_rows, new_cols

    if not keep_rows.any() or not keep_cols.any():
        raise ValueError(f'No ratings remain after requiring {min_ratings} ratings per item and '
                         f'{min_user_ratings} per user')

    if keep_rows.all() and keep_cols.all():
        return data

    logger.info('Dropped %d items and %d users with too few ratings', (~keep_cols).sum(),
                (~keep_rows).sum())
    return _restrict(data, keep_rows, keep_cols)


def intersect_users(first: RatingData, second: RatingData) -> Tuple[RatingData, RatingData]:
    """Restrict two data sets to the users present in both, in ascending identifier order."""
    common = np.intersect1d(first.user_ids, second.user_ids)
    if not common.size:
        raise ValueError('The data sets have no users in common')

    def restrict(data: RatingData) -> RatingData:
        order = np.argsort(data.user_ids, kind='stable')
        data = _reorder_rows(data, order)
        keep_rows = np.isin(data.user_ids, common)
        return _restrict(data, keep_rows, np.ones(data.matrix.p, dtype=bool))

    return restrict(first), restrict(second)


def _reorder_rows(data: RatingData, order: np.ndarray) -> RatingData:
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    matrix = data.matrix
    reordered = SparseRatingMatrix(matrix.n, matrix.p, inverse[matrix.rows], matrix.cols,
                                   matrix.values, matrix.scale)
    return RatingData(reordered, data.user_ids[order], data.item_ids)


def read_dataset(descriptor: DatasetDescriptor) -> RatingData:
    """Read, intersect and filter the data set described by ``descriptor``."""
    def read(path: str) -> RatingData:
        if descriptor.format is DataFormat.movielens_udata:
            return read_movielens(path, descriptor.n_categories or 5)

        return read_long_csv(path, descriptor)

    data = read(descriptor.path)
    if descriptor.intersect_with:
        data, _ = intersect_users(data, read(descriptor.intersect_with))

    return filter_min_ratings(data, descriptor.min_ratings, descriptor.min_user_ratings)


def read_dense(path: PathLike, n_categories: Optional[int] = None) -> SparseRatingMatrix:
    """
    Read a rating matrix stored as a headerless CSV file with empty fields for missing cells.

    :param n_categories: number of rating categories (by default the largest rating)
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=float)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, 0, 'the file contains no ratings') from None
    except (pd.errors.ParserError, ValueError) as exc:
        raise _parser_error(path, exc) from exc

    return SparseRatingMatrix.from_dense(frame.to_numpy(), n_categories)


def write_dense(path: PathLike, matrix: Union[SparseRatingMatrix, np.ndarray]) -> None:
    """Write a matrix as headerless CSV, leaving missing (NaN) cells empty."""
    if isinstance(matrix, SparseRatingMatrix):
        matrix = matrix.to_dense()

    pd.DataFrame(matrix).to_csv(path, header=False, index=False, na_rep='', float_format='%.10g')


def read_array(path: PathLike) -> np.ndarray:
    """Read a complete numeric matrix (such as predictions) from a headerless CSV file."""
    try:
        frame = pd.read_csv(path, header=None, dtype=float)
    except pd.errors.EmptyDataError:
        raise DataFormatError(path, 0, 'the file is empty') from None
    except (pd.errors.ParserError, ValueError) as exc:
        raise _parser_error(path, exc) from exc

    return frame.to_numpy()
