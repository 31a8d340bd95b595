from datetime import datetime, timezone
from functools import partial
from operator import setitem
from typing import List, Optional

import pytest
from _pytest.logging import LogCaptureFixture

from rdmc.events import (
    AsyncEventHub, Event, EventHub, ExperimentFinished, ExperimentStarted, ReplicationCompleted,
    ReplicationFailed)


def started(timestamp: Optional[datetime] = None) -> ExperimentStarted:
    if timestamp is None:
        return ExperimentStarted(experiment='test', jobs=4)

    return ExperimentStarted(timestamp=timestamp, experiment='test', jobs=4)


def test_float_timestamp():
    event = ExperimentStarted(timestamp=0.0, experiment='test', jobs=1)
    assert event.timestamp == datetime(1970, 1, 1, tzinfo=timezone.utc)


def test_default_timestamp_is_aware():
    assert started().timestamp.tzinfo is timezone.utc


class TestEventHub:
    def test_publish(self) -> None:
        timestamp = datetime.now(timezone.utc)
        events: List[Optional[Event]] = [None, None]
        with EventHub() as eventhub:
            eventhub.subscribe(partial(setitem, events, 0))
            eventhub.subscribe(partial(setitem, events, 1))
            eventhub.publish(started(timestamp))

        assert events[0] is events[1]
        assert isinstance(events[0], ExperimentStarted)
        assert events[0].timestamp == timestamp
        assert events[0].jobs == 4

    def test_event_type_filter(self) -> None:
        events = []
        with EventHub() as eventhub:
            eventhub.subscribe(events.append, [ExperimentFinished])
            eventhub.publish(started())
            eventhub.publish(ExperimentFinished(experiment='test', completed=4, failed=0))

        assert len(events) == 1
        assert isinstance(events[0], ExperimentFinished)

    def test_replication_events(self) -> None:
        events = []
        with EventHub() as eventhub:
            eventhub.subscribe(events.append, [ReplicationCompleted, ReplicationFailed])
            eventhub.publish(started())
            eventhub.publish(ReplicationCompleted(
                experiment='test', job_id=0, scenario='K=5/MNAR/none', replication=0,
                records=6, wall_time_ms=1.5))
            eventhub.publish(ReplicationFailed(
                experiment='test', job_id=1, scenario='K=5/MNAR/none', replication=1,
                exception='RuntimeError', traceback=''))

        assert [type(event) for event in events] == [ReplicationCompleted, ReplicationFailed]
        assert events[0].records == 6

    def test_unsubscribe(self) -> None:
        events = []
        with EventHub() as eventhub:
            token = eventhub.subscribe(events.append)
            eventhub.publish(started())
            eventhub.unsubscribe(token)
            eventhub.publish(started())

        assert len(events) == 1

    def test_publish_no_subscribers(self, caplog: LogCaptureFixture) -> None:
        with EventHub() as eventhub:
            eventhub.publish(started())

        assert not caplog.text

    def test_publish_exception(self, caplog: LogCaptureFixture) -> None:
        def bad_subscriber(event: Event) -> None:
            raise Exception('foo')

        events = []
        with EventHub() as eventhub:
            eventhub.subscribe(bad_subscriber)
            eventhub.subscribe(events.append)
            eventhub.publish(started())

        assert isinstance(events[0], ExperimentStarted)
        assert 'Error delivering ExperimentStarted' in caplog.text

    def test_subscribe_coroutine_callback(self) -> None:
        async def callback(event: Event) -> None:
            pass

        with EventHub() as eventhub:
            with pytest.raises(ValueError, match='Coroutine functions are not supported'):
                eventhub.subscribe(callback)


@pytest.mark.anyio
class TestAsyncEventHub:
    async def test_publish(self) -> None:
        async def async_setitem(event: Event) -> None:
            events[1] = event

        timestamp = datetime.now(timezone.utc)
        events: List[Optional[Event]] = [None, None]
        async with AsyncEventHub() as eventhub:
            eventhub.subscribe(partial(setitem, events, 0))
            eventhub.subscribe(async_setitem)
            eventhub.publish(started(timestamp))

        assert events[0] is events[1]
        assert isinstance(events[0], ExperimentStarted)
        assert events[0].timestamp == timestamp

    async def test_event_type_filter(self) -> None:
        events = []
        async with AsyncEventHub() as eventhub:
            eventhub.subscribe(events.append, [ExperimentStarted])
            eventhub.publish(ExperimentFinished(experiment='test', completed=0, failed=0))
            eventhub.publish(started())

        assert len(events) == 1
        assert isinstance(events[0], ExperimentStarted)

    async def test_unsubscribe(self) -> None:
        events = []
        async with AsyncEventHub() as eventhub:
            token = eventhub.subscribe(events.append)
            eventhub.publish(started())
            eventhub.unsubscribe(token)
            eventhub.publish(started())

        assert len(events) == 1

    async def test_publish_no_subscribers(self, caplog: LogCaptureFixture) -> None:
        async with AsyncEventHub() as eventhub:
            eventhub.publish(started())

        assert not caplog.text

    async def test_publish_exception(self, caplog: LogCaptureFixture) -> None:
        def bad_subscriber(event: Event) -> None:
            raise Exception('foo')

        events = []
        async with AsyncEventHub() as eventhub:
            eventhub.subscribe(bad_subscriber)
            eventhub.subscribe(events.append)
            eventhub.publish(started())

        assert isinstance(events[0], ExperimentStarted)
        assert 'Error delivering ExperimentStarted' in caplog.text
