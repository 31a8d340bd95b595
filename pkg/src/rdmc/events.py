from __future__ import annotations

import logging
from abc import abstractmethod
from asyncio import iscoroutinefunction
from concurrent.futures.thread import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import partial
from inspect import isawaitable
from logging import Logger
from typing import (
    Any, Callable, Dict, FrozenSet, Iterable, List, NewType, Optional, Type, Union)

import attr
from anyio import create_task_group
from anyio.abc import TaskGroup

from . import abc

SubscriptionToken = NewType('SubscriptionToken', object)


def timestamp_to_datetime(value: Union[datetime, float, None]) -> Optional[datetime]:
    if isinstance(value, float):
        return datetime.fromtimestamp(value, timezone.utc)

    return value


@attr.define(kw_only=True, frozen=True)
class Event:
    timestamp: datetime = attr.field(factory=partial(datetime.now, timezone.utc),
                                     converter=timestamp_to_datetime)


#
# Experiment events
#

@attr.define(kw_only=True, frozen=True)
class ExperimentEvent(Event):
    experiment: str


@attr.define(kw_only=True, frozen=True)
class ExperimentStarted(ExperimentEvent):
    """Signals that a runner has expanded an experiment into jobs and started running them."""
    jobs: int


@attr.define(kw_only=True, frozen=True)
class ExperimentFinished(ExperimentEvent):
    """Signals that every job of an experiment has either completed or failed."""
    completed: int
    failed: int
    exception: Optional[BaseException] = None


@attr.define(kw_only=True, frozen=True)
class ReplicationEvent(ExperimentEvent):
    job_id: int
    scenario: str
    replication: int


@attr.define(kw_only=True, frozen=True)
class ReplicationCompleted(ReplicationEvent):
    """Signals that a replication job produced its result records."""
    records: int
    wall_time_ms: float


@attr.define(kw_only=True, frozen=True)
class ReplicationFailed(ReplicationEvent):
    """Signals that a replication job raised an exception."""
    exception: str
    traceback: str


#
# Event delivery
#

@dataclass(eq=False, frozen=True)
class Subscription:
    callback: Callable[[Event], Any]
    event_types: Optional[FrozenSet[Type[Event]]]

    def accepts(self, event: Event) -> bool:
        return self.event_types is None or type(event) in self.event_types


@dataclass
class _BaseEventHub(abc.EventSource):
    _logger: Logger = field(init=False, default_factory=lambda: logging.getLogger(__name__))
    _subscriptions: Dict[SubscriptionToken, Subscription] = field(init=False, default_factory=dict)

    def subscribe(self, callback: Callable[[Event], Any],
                  event_types: Optional[Iterable[Type[Event]]] = None) -> SubscriptionToken:
        token = SubscriptionToken(object())
        types = frozenset(event_types) if event_types else None
        self._subscriptions[token] = Subscription(callback, types)
        return token

    def unsubscribe(self, token: SubscriptionToken) -> None:
        self._subscriptions.pop(token, None)

    def _recipients(self, event: Event) -> List[Callable[[Event], Any]]:
        return [subscription.callback for subscription in list(self._subscriptions.values())
                if subscription.accepts(event)]

    def _delivery_failed(self, event: Event) -> None:
        self._logger.exception('Error delivering %s event', event.__class__.__name__)

    @abstractmethod
    def publish(self, event: Event) -> None:
        """Hand the event to every subscriber whose type filter accepts it."""


class EventHub(_BaseEventHub):
    """Delivers events on a single background thread, in publishing order."""

    _executor: ThreadPoolExecutor

    def __enter__(self) -> EventHub:
        self._executor = ThreadPoolExecutor(1, thread_name_prefix='rdmc-events')
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._executor.shutdown(wait=exc_type is None)

    def subscribe(self, callback: Callable[[Event], Any],
                  event_types: Optional[Iterable[Type[Event]]] = None) -> SubscriptionToken:
        if iscoroutinefunction(callback):
            raise ValueError('Coroutine functions are not supported as callbacks on a synchronous '
                             'event source')

        return super().subscribe(callback, event_types)

    def _deliver(self, callback: Callable[[Event], Any], event: Event) -> None:
        try:
            callback(event)
        except BaseException:
            self._delivery_failed(event)

    def publish(self, event: Event) -> None:
        for callback in self._recipients(event):
            self._executor.submit(self._deliver, callback, event)


class AsyncEventHub(_BaseEventHub):
    """Delivers events as tasks of its own task group; callbacks may be coroutine functions."""

    _task_group: TaskGroup

    async def __aenter__(self) -> AsyncEventHub:
        self._task_group = create_task_group()
        await self._task_group.__aenter__()
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        await self._task_group.__aexit__(exc_type, exc_val, exc_tb)
        del self._task_group

    async def _deliver(self, callback: Callable[[Event], Any], event: Event) -> None:
        try:
            retval = callback(event)
            if isawaitable(retval):
                await retval
        except BaseException:
            self._delivery_failed(event)

    def publish(self, event: Event) -> None:
        for callback in self._recipients(event):
            self._task_group.start_soon(self._deliver, callback, event)
