from __future__ import annotations

from abc import ABCMeta, abstractmethod
from base64 import b64decode, b64encode
from typing import (
    TYPE_CHECKING, Any, Callable, Iterable, List, Mapping, Optional, Sequence, Type)

import numpy as np

if TYPE_CHECKING:
    from . import events
    from .structures import Fit, SparseRatingMatrix


class Loss(metaclass=ABCMeta):
    """Abstract base class that defines the interface that every loss function must implement."""

    __slots__ = ()

    #: name used in configuration files and on the command line
    name: str

    @abstractmethod
    def __call__(self, residuals: np.ndarray) -> np.ndarray:
        """
        Evaluate the loss element-wise.

        :param residuals: an array of residuals
        :return: an array of the same shape holding non-negative losses
        """

    def evaluate(self, residual: float) -> float:
        """Evaluate the loss for a single residual."""
        return float(self(np.asarray(residual, dtype=float)))

    def matrix_loss(self, residuals: Iterable[float]) -> float:
        """Return the sum of the element-wise losses over the given residuals."""
        residuals = np.fromiter(residuals, dtype=float) \
            if not isinstance(residuals, np.ndarray) else residuals

        return float(np.sum(self(residuals))) if residuals.size else 0.0

    @abstractmethod
    def __getstate__(self):
        """Return the (JSON compatible) serializable state of the loss."""

    @abstractmethod
    def __setstate__(self, state):
        """Initialize an empty instance from an existing state."""


class Completer(metaclass=ABCMeta):
    """
    Abstract base class for matrix completion methods.

    A completer fits a complete matrix of predictions on the original rating scale, optionally
    for a path of regularization parameters.
    """

    #: name of the method in result records
    name: str
    #: ``True`` if the method has a regularization parameter to select
    tunable: bool = False

    @property
    def validation_loss(self) -> Optional[Loss]:
        """The loss used to score held-out entries when selecting the regularization parameter."""
        return None

    def lambda_grid(self, matrix: SparseRatingMatrix) -> np.ndarray:
        """
        Return the ascending grid of candidate regularization parameters for ``matrix``.

        :raises TypeError: if the method has no regularization parameter
        """
        raise TypeError(f'{self.name} has no regularization parameter')

    @abstractmethod
    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        """
        Fit the method for every value in ``lambdas``.

        :param matrix: the observed training matrix
        :param lambdas: ascending regularization parameters (ignored by untuned methods, which
            return a single fit)
        :return: one fit per regularization parameter, in the order of ``lambdas``
        """

    def fit(self, matrix: SparseRatingMatrix, lambda_: Optional[float] = None) -> Fit:
        """Fit the method for a single regularization parameter."""
        return self.fit_path(matrix, [] if lambda_ is None else [lambda_])[0]

    def __repr__(self):
        return f'<{self.__class__.__name__} name={self.name!r}>'


class Serializer(metaclass=ABCMeta):
    __slots__ = ()

    @abstractmethod
    def serialize(self, obj) -> bytes:
        pass

    def serialize_to_unicode(self, obj) -> str:
        return b64encode(self.serialize(obj)).decode('ascii')

    @abstractmethod
    def deserialize(self, serialized: bytes):
        pass

    def deserialize_from_unicode(self, serialized: str):
        return self.deserialize(b64decode(serialized))


class EventSource(metaclass=ABCMeta):
    @abstractmethod
    def subscribe(
        self, callback: Callable[[events.Event], Any],
        event_types: Optional[Iterable[Type[events.Event]]] = None
    ) -> events.SubscriptionToken:
        """
        Subscribe to events from this event source.

        :param callback: callable to be called with the event object when an event is published
        :param event_types: an iterable of concrete Event classes to subscribe to
        """

    @abstractmethod
    def unsubscribe(self, token: events.SubscriptionToken) -> None:
        """
        Cancel an event subscription.

        :param token: a token returned from :meth:`subscribe`
        """


class RecordSink(metaclass=ABCMeta):
    """Destination of tidy result records."""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        pass

    @abstractmethod
    def write(self, record: Mapping[str, Any]) -> None:
        """
        Write a single record.

        :param record: a flat mapping of column names to values
        """

    def write_all(self, records: Iterable[Mapping[str, Any]]) -> None:
        for record in records:
            self.write(record)

    @property
    @abstractmethod
    def count(self) -> int:
        """Return the number of records written so far."""
