"""
Replicated comparison experiments.

An :class:`ExperimentConfig` describes a grid of scenarios (rating scale, missingness, attack,
survey layout, ...). Every scenario is replicated with independent seeds; each replication
generates or loads its data, fits every configured method and emits tidy
:class:`ResultRecord` rows.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import attr
import numpy as np

from .abc import Completer
from .attacks import AttackSpec, forge_profiles, select_target
from .enums import AttackScheme, Design, DataFormat, Metric, Missingness, TargetMode
from .exceptions import ConfigurationError
from .io import DatasetDescriptor, RatingData, read_dataset
from .losses import LOSS_NAMES, create_loss
from .methods import METHOD_NAMES, RDMC, SoftImpute, create_method
from .metrics import mae, mps
from .policies import LambdaPolicy, StoppingPolicy
from .ratings import split_train_test
from .selection import ValidationReport, fit_selected
from .simulation import RecommenderSimConfig, SurveySimConfig, gen_recommender, gen_survey
from .structures import Fit, SparseRatingMatrix
from .util import Stopwatch, spawn_seeds
from .validators import (
    as_enum, as_tuple_of, each, half_open_fraction, non_empty, non_negative_number,
    open_fraction, positive_number, unit_fraction)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _known_method(instance, attribute, value) -> None:
    if value not in METHOD_NAMES and ':' not in value:
        raise ValueError(f'Unknown method {value!r} in {attribute.name} (expected one of '
                         f'{", ".join(METHOD_NAMES)} or a module:factory reference)')


def _known_loss(instance, attribute, value) -> None:
    if value not in LOSS_NAMES:
        raise ValueError(f'Unknown loss {value!r} in {attribute.name} (expected one of '
                         f'{", ".join(LOSS_NAMES)})')


def _optional_str(value) -> Optional[str]:
    return None if value is None else str(value)


@attr.define(frozen=True, kw_only=True)
class ExperimentConfig:
    """
    Configuration of a replicated experiment.

    Fields holding tuples span the scenario grid; a scalar given for them in a configuration
    file is treated as a one-element list.
    """

    name: str = attr.field(default='experiment', validator=non_empty)
    design: Design = attr.field(default=Design.recommender, converter=as_enum(Design))
    replications: int = attr.field(default=100, validator=positive_number)
    seed: int = attr.field(default=0, validator=non_negative_number)
    methods: Tuple[str, ...] = attr.field(
        default=METHOD_NAMES, converter=as_tuple_of(str), validator=[non_empty,
                                                                     each(_known_method)])
    losses: Tuple[str, ...] = attr.field(default=('phuber',), converter=as_tuple_of(str),
                                         validator=[non_empty, each(_known_loss)])
    tau: Optional[float] = None
    stopping: Tuple[StoppingPolicy, ...] = attr.field(
        default=(StoppingPolicy.strict,), converter=as_tuple_of(as_enum(StoppingPolicy)),
        validator=non_empty)

    # Recommender design
    n_categories: Tuple[int, ...] = attr.field(default=(5,), converter=as_tuple_of(int),
                                               validator=non_empty)
    missingness: Tuple[Missingness, ...] = attr.field(
        default=(Missingness.mnar,), converter=as_tuple_of(as_enum(Missingness)),
        validator=non_empty)
    n: int = attr.field(default=300, validator=positive_number)
    p: int = attr.field(default=200, validator=positive_number)
    rank: int = attr.field(default=20, validator=positive_number)
    mcar_fraction: float = attr.field(default=0.7, validator=open_fraction)

    # Attacks
    attacks: Tuple[AttackScheme, ...] = attr.field(
        default=(AttackScheme.none,), converter=as_tuple_of(as_enum(AttackScheme)),
        validator=non_empty)
    epsilon: Tuple[float, ...] = attr.field(default=(0.2,), converter=as_tuple_of(float),
                                            validator=[non_empty, each(positive_number)])
    filler_fraction: float = attr.field(default=0.1, validator=unit_fraction)
    selected_fraction: float = attr.field(default=0.1, validator=unit_fraction)
    unpopular_threshold: int = attr.field(default=20, validator=non_negative_number)
    target_top_fraction: float = attr.field(default=0.1, validator=unit_fraction)
    include_mode_in_mps: bool = False

    # Survey design
    constructs: int = attr.field(default=10, validator=positive_number)
    items_per_construct: Tuple[int, ...] = attr.field(default=(4,), converter=as_tuple_of(int),
                                                      validator=non_empty)
    abandonment: Tuple[float, ...] = attr.field(
        default=(0.2,), converter=as_tuple_of(float),
        validator=[non_empty, each(half_open_fraction)])
    careless: Tuple[float, ...] = attr.field(default=(0.0,), converter=as_tuple_of(float),
                                             validator=[non_empty, each(half_open_fraction)])

    # Case studies on real data
    data_path: Optional[str] = attr.field(default=None, converter=_optional_str)
    data_format: DataFormat = attr.field(default=DataFormat.movielens_udata,
                                         converter=as_enum(DataFormat))
    delimiter: str = ','
    min_ratings: int = attr.field(default=20, validator=non_negative_number)
    min_user_ratings: int = attr.field(default=0, validator=non_negative_number)
    intersect_with: Optional[str] = attr.field(default=None, converter=_optional_str)
    test_fraction: float = attr.field(default=0.2, validator=open_fraction)

    # Model selection
    holdout_replications: Optional[int] = None
    holdout_fraction: float = attr.field(default=0.1, validator=open_fraction)
    lambda_policy: LambdaPolicy = attr.field(default=LambdaPolicy.reselect,
                                             converter=as_enum(LambdaPolicy))

    def __attrs_post_init__(self):
        if self.design is Design.dataset and not self.data_path:
            raise ValueError('The dataset design needs data_path')
        if self.design is Design.survey and self.attacks != (AttackScheme.none,):
            raise ValueError('The survey design does not support attacks')
        if self.holdout_replications is not None and self.holdout_replications < 1:
            raise ValueError('holdout_replications must be positive')

    @property
    def validation_replications(self) -> int:
        """Holdout replications of the model selection (5 in simulations, 10 on real data)."""
        if self.holdout_replications is not None:
            return self.holdout_replications

        return 10 if self.design is Design.dataset else 5

    def dataset(self) -> DatasetDescriptor:
        return DatasetDescriptor(path=self.data_path, format=self.data_format,
                                 min_ratings=self.min_ratings,
                                 min_user_ratings=self.min_user_ratings,
                                 delimiter=self.delimiter, intersect_with=self.intersect_with)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> ExperimentConfig:
        """
        Build a configuration from a flat mapping of field names to values.

        :raises ConfigurationError: on unknown keys or invalid values
        """
        known = {field.name for field in attr.fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigurationError(f'Unknown configuration key(s): {", ".join(unknown)}')

        try:
            return cls(**mapping)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f'Invalid configuration: {exc}') from exc

    @classmethod
    def from_file(cls, path: PathLike) -> ExperimentConfig:
        """Read a configuration from a JSON file holding a single object."""
        try:
            with open(path, encoding='utf-8') as fp:
                mapping = json.load(fp)
        except ValueError as exc:
            raise ConfigurationError(f'{path}: {exc}') from exc

        if not isinstance(mapping, dict):
            raise ConfigurationError(f'{path}: expected a JSON object at the top level')

        return cls.from_mapping(mapping)

    def to_mapping(self) -> Dict[str, Any]:
        def serialize(instance, attribute, value):
            if isinstance(value, tuple):
                return [getattr(element, 'value', element) for element in value]

            return getattr(value, 'value', value)

        return attr.asdict(self, value_serializer=serialize)


@attr.define(frozen=True, kw_only=True)
class Scenario:
    """One point of the scenario grid of an experiment."""

    design: Design
    n_categories: Optional[int] = None
    missingness: Optional[Missingness] = None
    attack: AttackScheme = AttackScheme.none
    epsilon: Optional[float] = None
    items_per_construct: Optional[int] = None
    abandonment: Optional[float] = None
    careless: Optional[float] = None

    @property
    def label(self) -> str:
        parts = []
        if self.n_categories is not None:
            parts.append(f'K={self.n_categories}')
        if self.missingness is not None:
            parts.append(self.missingness.value)
        if self.items_per_construct is not None:
            parts.append(f'r={self.items_per_construct}')
        if self.abandonment is not None:
            parts.append(f'abandon={self.abandonment:g}')
        if self.careless is not None:
            parts.append(f'careless={self.careless:g}')

        parts.append(self.attack.value)
        if self.epsilon is not None:
            parts.append(f'eps={self.epsilon:g}')

        return '/'.join(parts)


def _attack_grid(config: ExperimentConfig) -> List[Tuple[AttackScheme, Optional[float]]]:
    grid: List[Tuple[AttackScheme, Optional[float]]] = []
    for scheme in config.attacks:
        if scheme is AttackScheme.none:
            grid.append((scheme, None))
        else:
            grid.extend((scheme, epsilon) for epsilon in config.epsilon)

    return grid


def scenarios(config: ExperimentConfig) -> List[Scenario]:
    """Expand the scenario grid of ``config``."""
    if config.design is Design.recommender:
        return [Scenario(design=config.design, n_categories=k, missingness=missingness,
                         attack=scheme, epsilon=epsilon)
                for k, missingness, (scheme, epsilon)
                in product(config.n_categories, config.missingness, _attack_grid(config))]
    elif config.design is Design.survey:
        return [Scenario(design=config.design, n_categories=k, items_per_construct=r,
                         abandonment=abandonment, careless=careless)
                for k, r, abandonment, careless
                in product(config.n_categories, config.items_per_construct, config.abandonment,
                           config.careless)]

    return [Scenario(design=config.design, attack=scheme, epsilon=epsilon)
            for scheme, epsilon in _attack_grid(config)]


@attr.define(frozen=True, kw_only=True)
class Job:
    """A single replication of a scenario."""

    id: int
    scenario: Scenario
    replication: int
    seed: np.random.SeedSequence = attr.field(eq=False)


@attr.define(frozen=True, kw_only=True)
class ResultRecord:
    """A single metric value of one method in one replication."""

    experiment: str = attr.field(validator=non_empty)
    scenario: str = attr.field(validator=non_empty)
    replication: int
    design: Design
    method: str = attr.field(validator=non_empty)
    metric: Metric = attr.field(converter=as_enum(Metric))
    value: float
    loss: Optional[str] = None
    stopping: Optional[StoppingPolicy] = None
    n_categories: Optional[int] = None
    missingness: Optional[Missingness] = None
    attack: AttackScheme = AttackScheme.none
    epsilon: Optional[float] = None
    items_per_construct: Optional[int] = None
    abandonment: Optional[float] = None
    careless: Optional[float] = None
    target: Optional[int] = None
    lambda_: Optional[float] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    wall_time_ms: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        """Return the record as a flat mapping with plain values."""
        record = {}
        for field_ in attr.fields(type(self)):
            value = getattr(self, field_.name)
            record[RECORD_KEYS.get(field_.name, field_.name)] = getattr(value, 'value', value)

        return record


RECORD_KEYS = {'lambda_': 'lambda'}
#: column names of result records, in order
RECORD_FIELDS = tuple(RECORD_KEYS.get(field_.name, field_.name)
                      for field_ in attr.fields(ResultRecord))
#: column names of diagnostic records, in order
DIAGNOSTIC_FIELDS = ('experiment', 'scenario', 'replication', 'method', 'loss', 'stopping',
                     'phase', 'holdout', 'lambda', 'iterations', 'converged', 'final_loss',
                     'wall_time_ms')


@dataclass
class JobResult:
    """The result and diagnostic records of one job."""

    job: Job
    records: List[ResultRecord] = field(default_factory=list)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)


@dataclass(frozen=True)
class MethodVariant:
    method: Completer
    loss: Optional[str] = None
    stopping: Optional[StoppingPolicy] = None

    @property
    def selection_key(self) -> tuple:
        return getattr(self.method, 'selection_key', self.method.name), self.loss, self.stopping


class Experiment:
    """
    Runs the replications of an experiment configuration.

    :param config: the experiment configuration
    :param data: the rating data of a case study (read from ``config.data_path`` when omitted)
    """

    def __init__(self, config: ExperimentConfig, data: Optional[RatingData] = None):
        self.config = config
        self._data = data

    @property
    def data(self) -> Optional[RatingData]:
        return self._data

    def prepare(self) -> None:
        """Load the rating data of a case study, if not done yet."""
        if self.config.design is Design.dataset and self._data is None:
            self._data = read_dataset(self.config.dataset())

    def jobs(self) -> List[Job]:
        """
        Expand the experiment into jobs.

        Replication ``r`` of every scenario uses the same seed, so scenarios are compared on
        common random numbers.
        """
        seeds = spawn_seeds(self.config.seed, self.config.replications)
        jobs = []
        for scenario in scenarios(self.config):
            for replication, seed in enumerate(seeds):
                jobs.append(Job(id=len(jobs), scenario=scenario, replication=replication,
                                seed=seed))

        return jobs

    def method_variants(self, n_categories: int, seed: np.random.SeedSequence,
                        mps: bool = False) -> List[MethodVariant]:
        """Instantiate every configured method (RDMC once per loss and stopping policy)."""
        config = self.config
        variants = []
        for name, method_seed in zip(config.methods, spawn_seeds(seed, len(config.methods))):
            if mps and name == 'mode' and not config.include_mode_in_mps:
                continue

            if name == 'rdmc':
                for loss, stopping in product(config.losses, config.stopping):
                    method = RDMC(create_loss(loss, config.tau, n_categories), stopping)
                    variants.append(MethodVariant(method, loss, stopping))
            elif name in ('si', 'si-discretized'):
                for stopping in config.stopping:
                    method = SoftImpute(stopping, discretize=name == 'si-discretized')
                    variants.append(MethodVariant(method, None, stopping))
            else:
                variants.append(MethodVariant(create_method(name, seed=method_seed)))

        return variants

    def run_job(self, job: Job) -> JobResult:
        """Run a single replication and return its records."""
        data_seed, selection_seed, attack_seed, method_seed = spawn_seeds(job.seed, 4)
        return _JobRun(self, job, selection_seed, method_seed).run(data_seed, attack_seed)


class _JobRun:
    def __init__(self, experiment: Experiment, job: Job, selection_seed, method_seed):
        self.experiment = experiment
        self.config = experiment.config
        self.job = job
        self.scenario = job.scenario
        self.selection_seed = selection_seed
        self.method_seed = method_seed
        self.result = JobResult(job)

    def run(self, data_seed, attack_seed) -> JobResult:
        design = self.scenario.design
        if design is Design.recommender:
            truth = gen_recommender(RecommenderSimConfig(
                n=self.config.n, p=self.config.p, rank=self.config.rank,
                n_categories=self.scenario.n_categories, missingness=self.scenario.missingness,
                mcar_fraction=self.config.mcar_fraction), data_seed)
            if self.scenario.attack is AttackScheme.none:
                self.score_completion(truth.observed, truth.full, truth.missing_cells())
            else:
                self.score_attack(truth.observed, select_target(truth, TargetMode.simulation),
                                  attack_seed)
        elif design is Design.survey:
            truth = gen_survey(SurveySimConfig(
                n=self.config.n, constructs=self.config.constructs,
                items_per_construct=self.scenario.items_per_construct,
                n_categories=self.scenario.n_categories, abandonment=self.scenario.abandonment,
                careless=self.scenario.careless), data_seed)
            self.score_completion(truth.observed, truth.full,
                                  truth.missing_cells(exclude_careless=True))
        else:
            matrix = self.experiment.data.matrix
            if self.scenario.attack is AttackScheme.none:
                split = split_train_test(matrix, self.config.test_fraction, data_seed)
                test = split.test
                self.score_completion(split.train, test.to_dense(), (test.rows, test.cols))
            else:
                target = select_target(matrix, TargetMode.empirical,
                                       self.config.target_top_fraction, self.config.min_ratings)
                self.score_attack(matrix, target, attack_seed)

        return self.result

    def fit(self, variant: MethodVariant, matrix: SparseRatingMatrix,
            reports: Dict[tuple, ValidationReport], phase: str) -> Tuple[Fit, float]:
        cached = reports.get(variant.selection_key)
        with Stopwatch() as stopwatch:
            fit, report = fit_selected(variant.method, matrix,
                                       self.config.validation_replications,
                                       self.config.holdout_fraction, self.selection_seed,
                                       report=cached)

        if report is not None and cached is None:
            reports[variant.selection_key] = report
            validation_phase = 'validation' if phase == 'final' else f'{phase}-validation'
            self.add_diagnostics(variant, validation_phase, report.diagnostic_records())

        if fit.diagnostics is not None:
            self.add_diagnostics(variant, phase, [{'replication': None,
                                                   **fit.diagnostics.as_record()}])

        return fit, stopwatch.elapsed_ms

    def add_diagnostics(self, variant: MethodVariant, phase: str,
                        records: Iterable[Dict[str, Any]]) -> None:
        for record in records:
            self.result.diagnostics.append({
                'experiment': self.config.name, 'scenario': self.scenario.label,
                'replication': self.job.replication, 'method': variant.method.name,
                'loss': variant.loss,
                'stopping': variant.stopping.value if variant.stopping else None,
                'phase': phase, 'holdout': record['replication'], 'lambda': record['lambda'],
                'iterations': record['iterations'], 'converged': record['converged'],
                'final_loss': record['final_loss'], 'wall_time_ms': record['wall_time_ms']
            })

    def add_record(self, variant: MethodVariant, metric: Metric, value: float, fit: Fit,
                   wall_time_ms: float, target: Optional[int] = None) -> None:
        diagnostics = fit.diagnostics
        self.result.records.append(ResultRecord(
            experiment=self.config.name, scenario=self.scenario.label,
            replication=self.job.replication, design=self.scenario.design,
            method=variant.method.name, metric=metric, value=value, loss=variant.loss,
            stopping=variant.stopping, n_categories=self.scenario.n_categories,
            missingness=self.scenario.missingness, attack=self.scenario.attack,
            epsilon=self.scenario.epsilon, items_per_construct=self.scenario.items_per_construct,
            abandonment=self.scenario.abandonment, careless=self.scenario.careless,
            target=target, lambda_=fit.lambda_,
            iterations=diagnostics.iterations if diagnostics else None,
            converged=diagnostics.converged if diagnostics else None,
            wall_time_ms=wall_time_ms))

    def score_completion(self, train: SparseRatingMatrix, truth: np.ndarray,
                         cells: Tuple[np.ndarray, np.ndarray]) -> None:
        reports: Dict[tuple, ValidationReport] = {}
        n_categories = train.scale.max_categories
        for variant in self.experiment.method_variants(n_categories, self.method_seed):
            fit, wall_time_ms = self.fit(variant, train, reports, 'final')
            self.add_record(variant, Metric.mae, mae(truth, fit.predictions, cells), fit,
                            wall_time_ms)

        logger.info('Replication %d of %s done', self.job.replication, self.scenario.label)

    def score_attack(self, matrix: SparseRatingMatrix, target: int, attack_seed) -> None:
        spec = AttackSpec(scheme=self.scenario.attack, epsilon=self.scenario.epsilon,
                          filler_fraction=self.config.filler_fraction,
                          selected_fraction=self.config.selected_fraction,
                          unpopular_threshold=self.config.unpopular_threshold)
        attack = forge_profiles(matrix, target, spec, attack_seed)
        observed = np.zeros(matrix.n, dtype=bool)
        observed[matrix.column(target)[0]] = True
        unobserved_rows = np.flatnonzero(~observed)

        before_reports: Dict[tuple, ValidationReport] = {}
        after_reports: Dict[tuple, ValidationReport] = {}
        n_categories = matrix.scale.max_categories
        for variant in self.experiment.method_variants(n_categories, self.method_seed, mps=True):
            before, _ = self.fit(variant, matrix, before_reports, 'before-attack')
            report = before_reports.get(variant.selection_key)
            if self.config.lambda_policy is LambdaPolicy.reuse and report is not None:
                with Stopwatch() as stopwatch:
                    after = variant.method.fit(attack.matrix, report.selected_lambda)

                wall_time_ms = stopwatch.elapsed_ms
            else:
                after, wall_time_ms = self.fit(variant, attack.matrix, after_reports,
                                               'after-attack')

            value = mps(before.predictions, after.predictions, target, unobserved_rows)
            self.add_record(variant, Metric.mps, value, after, wall_time_ms, target)

        logger.info('Replication %d of %s done (target item %d, %d fake profiles)',
                    self.job.replication, self.scenario.label, target, attack.n_fake)
