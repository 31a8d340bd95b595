from __future__ import annotations

import csv
from pathlib import Path
from typing import IO, Any, Mapping, Optional, Sequence, Union

from ..abc import RecordSink


class CSVSink(RecordSink):
    """
    Writes records as tidy CSV: a header row followed by one line per record, in UTF-8.

    The file is opened when the sink is entered as a context manager and closed on exit.

    :param path: the output file (overwritten)
    :param fieldnames: column names; taken from the keys of the first record if omitted
    """

    def __init__(self, path: Union[str, Path], fieldnames: Optional[Sequence[str]] = None):
        self.path = Path(path)
        self.fieldnames = list(fieldnames) if fieldnames is not None else None
        self._file: Optional[IO[str]] = None
        self._writer: Optional[csv.DictWriter] = None
        self._count = 0

    def __enter__(self) -> CSVSink:
        self._file = self.path.open('w', encoding='utf-8', newline='')
        self._count = 0
        if self.fieldnames is not None:
            self._start(self.fieldnames)

        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._file is not None:
            self._file.close()

        self._file = self._writer = None

    def _start(self, fieldnames: Sequence[str]) -> None:
        self._writer = csv.DictWriter(self._file, fieldnames, lineterminator='\n')
        self._writer.writeheader()

    def write(self, record: Mapping[str, Any]) -> None:
        if self._file is None:
            raise RuntimeError('The sink must be entered before writing to it')

        if self._writer is None:
            self._start(list(record))

        self._writer.writerow(record)
        self._count += 1

    @property
    def count(self) -> int:
        return self._count

    def __repr__(self):
        return f'{self.__class__.__name__}(path={str(self.path)!r})'
