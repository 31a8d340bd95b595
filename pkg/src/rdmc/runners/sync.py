from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from logging import Logger, getLogger
from typing import Any, Callable, Iterable, List, Optional, Type, Union

from .. import events
from ..abc import EventSource, RecordSink
from ..enums import RunState
from ..events import (
    EventHub, ExperimentFinished, ExperimentStarted, ReplicationCompleted, ReplicationFailed,
    SubscriptionToken)
from ..exceptions import ExperimentAbortedError
from ..experiment import Experiment, ExperimentConfig, Job, JobResult
from ..util import Stopwatch
from . import MAX_FAILURE_RATIO, RunSummary, describe_exception


class ExperimentRunner(EventSource):
    """
    Runs the replications of an experiment in a thread pool.

    Records are written to the sinks in job order, regardless of the order in which the jobs
    finish.

    :param experiment: the experiment (or its configuration) to run
    :param sink: receives the result records
    :param diagnostics_sink: receives the solver diagnostics, if given
    :param max_workers: number of worker threads (defaults to the number of CPUs)
    :param max_failure_ratio: abort the run once more than this share of the jobs has failed
    :param logger: the logger to use (defaults to the module logger)
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
        self._events = EventHub()

        if self.max_workers < 1:
            raise ValueError('max_workers must be at least 1')

    @property
    def state(self) -> RunState:
        return self._state

    def subscribe(self, callback: Callable[[events.Event], Any],
                  event_types: Optional[Iterable[Type[events.Event]]] = None) -> SubscriptionToken:
        return self._events.subscribe(callback, event_types)

    def unsubscribe(self, token: events.SubscriptionToken) -> None:
        self._events.unsubscribe(token)

    def run(self) -> RunSummary:
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
            with ExitStack() as exit_stack:
                exit_stack.enter_context(self._events)
                exit_stack.enter_context(self.sink)
                if self.diagnostics_sink is not None:
                    exit_stack.enter_context(self.diagnostics_sink)

                self.experiment.prepare()
                jobs = self.experiment.jobs()
                summary = RunSummary(name, len(jobs))
                self._state = RunState.started
                self._events.publish(ExperimentStarted(experiment=name, jobs=len(jobs)))
                self.logger.info('Running %d jobs of experiment %r on %d threads', len(jobs),
                                 name, self.max_workers)
                aborted: Optional[ExperimentAbortedError] = None
                try:
                    self._run_jobs(jobs, summary)
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

    def _run_jobs(self, jobs: List[Job], summary: RunSummary) -> None:
        with ThreadPoolExecutor(self.max_workers, thread_name_prefix='rdmc-runner') as executor:
            futures = [executor.submit(self._run_job, job) for job in jobs]
            try:
                for future in futures:
                    result = future.result()
                    if result is None:
                        summary.failed += 1
                        if summary.failed > self.max_failure_ratio * summary.total:
                            raise ExperimentAbortedError(summary.failed, summary.total)
                    else:
                        self._write(result, summary)
            except BaseException:
                self._state = RunState.stopping
                for future in futures:
                    future.cancel()

                raise

    def _write(self, result: JobResult, summary: RunSummary) -> None:
        self.sink.write_all(record.as_dict() for record in result.records)
        if self.diagnostics_sink is not None:
            self.diagnostics_sink.write_all(result.diagnostics)

        summary.completed += 1
        summary.records += len(result.records)

    def _run_job(self, job: Job) -> Optional[JobResult]:
        name = self.experiment.config.name
        try:
            with Stopwatch() as stopwatch:
                result = self.experiment.run_job(job)
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
