from __future__ import annotations

from dataclasses import dataclass
from traceback import format_tb
from typing import Tuple

#: share of failed jobs above which a run is aborted
MAX_FAILURE_RATIO = 0.1


@dataclass
class RunSummary:
    """Counts of a finished experiment run."""

    experiment: str
    total: int
    completed: int = 0
    failed: int = 0
    records: int = 0


def describe_exception(exc: BaseException) -> Tuple[str, str]:
    """Return the qualified name and the formatted traceback of an exception."""
    if exc.__class__.__module__ == 'builtins':
        exc_name = exc.__class__.__qualname__
    else:
        exc_name = f'{exc.__class__.__module__}.{exc.__class__.__qualname__}'

    return exc_name, '\n'.join(format_tb(exc.__traceback__))
