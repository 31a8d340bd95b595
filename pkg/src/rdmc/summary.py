"""Per-group summaries of result records, as drawn in box plots."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd

#: columns identifying a box of a box plot, in order; absent columns are skipped
GROUP_COLUMNS = ('design', 'scenario', 'n_categories', 'missingness', 'attack', 'epsilon',
                 'items_per_construct', 'abandonment', 'careless', 'method', 'loss', 'stopping',
                 'metric')


def _first_quartile(values: pd.Series) -> float:
    return values.quantile(0.25)


def _third_quartile(values: pd.Series) -> float:
    return values.quantile(0.75)


def summarize(records: Union[pd.DataFrame, str, Path],
              by: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Compute the median, quartiles and count of the record values of every group.

    :param records: result records, or the path of a records CSV file
    :param by: grouping columns (by default those of :data:`GROUP_COLUMNS` that are present)
    :return: one row per group with the columns ``median``, ``q1``, ``q3`` and ``count``
    :raises ValueError: if there are no records or a grouping column is missing
    """
    frame = records if isinstance(records, pd.DataFrame) else pd.read_csv(records)
    if frame.empty:
        raise ValueError('There are no records to summarize')

    if by is None:
        by = [column for column in GROUP_COLUMNS if column in frame.columns]
    else:
        missing = [column for column in by if column not in frame.columns]
        if missing:
            raise ValueError(f'The records lack the grouping column(s) {", ".join(missing)}')

    grouped = frame.groupby(list(by), dropna=False, sort=False)['value']
    return grouped.agg(median='median', q1=_first_quartile, q3=_third_quartile,
                       count='count').reset_index()
