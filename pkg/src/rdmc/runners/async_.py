from __future__ import annotations

import os
from contextlib import AsyncExitStack
from logging import Logger, getLogger
from typing import Any, Callable, Iterable, List, Optional, Type, Union

from anyio import CapacityLimiter, create_task_group, to_thread
from anyio.abc import CancelScope

from ..abc import EventSource, RecordSink
from ..enums import RunState
from ..events import (
    AsyncEventHub, Event, ExperimentFinished, ExperimentStarted, ReplicationCompleted,
    ReplicationFailed, SubscriptionToken)
from ..exceptions import ExperimentAbortedError
from ..experiment import Experiment, ExperimentConfig, Job, JobResult
from ..util import Stopwatch
from . import MAX_FAILURE_RATIO, RunSummary, describe_exception


class AsyncExperimentRunner(EventSource):
    """
    Runs the replications of an experiment from an event loop.

    The numerical work of every job runs in a worker thread; at most ``max_workers`` jobs run
    at the same time. Records are written to the sinks in job order as soon as all earlier jobs
    have finished.
    """

    _state: RunState = RunState.stopped

    def __init__(self, experiment: Union[Experiment, ExperimentConfig], sink: RecordSink, *,
                 diagnostics_sink: Optional[RecordSink] = None,
                 max_workers: Optional[int] = None,
                 max_failure_ratio: float = MAX_FAILURE_RATIO,
                 logger: Optional[Logger] = None):
        if isinstance(experiment, ExperimentConfig):
            experiment = Experiment(experiment)

        self.experiment = experiment
        self.sink = sink
        self.diagnostics_sink = diagnostics_sink
        self.max_workers = max_workers or os.cpu_count() or 1
        self.max_failure_ratio = max_failure_ratio
        self.logger = logger or getLogger(__name__)
        self._events = AsyncEventHub()

        if self.max_workers < 1:
            raise ValueError('max_workers must be at least 1')

    @property
    def state(self) -> RunState:
        return self._state

    def subscribe(self, callback: Callable[[Event], Any],
                  event_types: Optional[Iterable[Type[Event]]] = None) -> SubscriptionToken:
        return self._events.subscribe(callback, event_types)

    def unsubscribe(self, token: SubscriptionToken) -> None:
        self._events.unsubscribe(token)

    async def run(self) -> RunSummary:
        """
        Run every job of the experiment.

        :raises ExperimentAbortedError: if too many jobs failed
        """
        if self._state is not RunState.stopped:
            raise RuntimeError(f'This function cannot be called while the runner is in the '
                               f'{self._state} state')

        self._state = RunState.starting
        name = self.experiment.config.name
        try:
            async with AsyncExitStack() as exit_stack:
                await exit_stack.enter_async_context(self._events)
                exit_stack.enter_context(self.sink)
                if self.diagnostics_sink is not None:
                    exit_stack.enter_context(self.diagnostics_sink)

                await to_thread.run_sync(self.experiment.prepare)
                jobs = self.experiment.jobs()
                summary = RunSummary(name, len(jobs))
                self._state = RunState.started
                self._events.publish(ExperimentStarted(experiment=name, jobs=len(jobs)))
                aborted: Optional[ExperimentAbortedError] = None
                try:
                    await self._run_jobs(jobs, summary)
                except ExperimentAbortedError as exc:
                    aborted = exc
                except BaseException as exc:
                    self._events.publish(ExperimentFinished(
                        experiment=name, completed=summary.completed, failed=summary.failed,
                        exception=exc))
                    raise

                # the hub drains its pending deliveries on a clean exit
                self._events.publish(ExperimentFinished(
                    experiment=name, completed=summary.completed, failed=summary.failed,
                    exception=aborted))
        finally:
            self._state = RunState.stopped

        if aborted is not None:
            raise aborted

        self.logger.info('Experiment %r finished: %d jobs completed, %d failed, %d records',
                         name, summary.completed, summary.failed, summary.records)
        return summary

    async def _run_jobs(self, jobs: List[Job], summary: RunSummary) -> None:
        results: List[Optional[JobResult]] = [None] * len(jobs)
        finished = [False] * len(jobs)
        next_index = 0
        limiter = CapacityLimiter(self.max_workers)

        def flush() -> None:
            nonlocal next_index
            while next_index < len(jobs) and finished[next_index]:
                result = results[next_index]
                if result is not None:
                    self._write(result, summary)
                    results[next_index] = None

                next_index += 1

        async def run_job(index: int, job: Job, cancel_scope: CancelScope) -> None:
            results[index] = await self._run_job(job, limiter)
            finished[index] = True
            if results[index] is None:
                summary.failed += 1
                if summary.failed > self.max_failure_ratio * summary.total:
                    self._state = RunState.stopping
                    cancel_scope.cancel()
                    return

            flush()

        async with create_task_group() as tg:
            for index, job in enumerate(jobs):
                tg.start_soon(run_job, index, job, tg.cancel_scope)

        if summary.failed > self.max_failure_ratio * summary.total:
            raise ExperimentAbortedError(summary.failed, summary.total)

    def _write(self, result: JobResult, summary: RunSummary) -> None:
        self.sink.write_all(record.as_dict() for record in result.records)
        if self.diagnostics_sink is not None:
            self.diagnostics_sink.write_all(result.diagnostics)

        summary.completed += 1
        summary.records += len(result.records)

    async def _run_job(self, job: Job, limiter: CapacityLimiter) -> Optional[JobResult]:
        name = self.experiment.config.name
        try:
            with Stopwatch() as stopwatch:
                result = await to_thread.run_sync(self.experiment.run_job, job, limiter=limiter)
        except Exception as exc:
            self.logger.exception('Replication %d of scenario %s failed', job.replication,
                                  job.scenario.label)
            exc_name, formatted_traceback = describe_exception(exc)
            self._events.publish(ReplicationFailed(
                experiment=name, job_id=job.id, scenario=job.scenario.label,
                replication=job.replication, exception=exc_name,
                traceback=formatted_traceback))
            return None

        self._events.publish(ReplicationCompleted(
            experiment=name, job_id=job.id, scenario=job.scenario.label,
            replication=job.replication, records=len(result.records),
            wall_time_ms=stopwatch.elapsed_ms))
        return result
