from __future__ import annotations

from typing import Any, Dict, List, Mapping

from ..abc import RecordSink


class MemorySink(RecordSink):
    """Keeps the records in a list."""

    def __init__(self) -> None:
        self.records: List[Dict[str, Any]] = []

    def write(self, record: Mapping[str, Any]) -> None:
        self.records.append(dict(record))

    @property
    def count(self) -> int:
        return len(self.records)

    def __repr__(self):
        return f'{self.__class__.__name__}(count={self.count})'
