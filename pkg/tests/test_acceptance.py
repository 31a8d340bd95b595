"""
Reproduction checks of the comparison studies at desk scale.

These run experiment grids on scaled-down matrices (150 x 100, rank 10) with liberal stopping and
three holdout masks per selection. ``RDMC_ACCEPTANCE_REPLICATIONS`` sets the number of
replications (default 5). They are deselected by default (``-m "not slow"``). The MovieLens
checks additionally need ``RDMC_MOVIELENS`` to point at the MovieLens 100K ``u.data`` file.
"""
import os
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import pytest

from rdmc.experiment import Experiment, ExperimentConfig
from rdmc.io import DatasetDescriptor, RatingData, read_dataset
from rdmc.runners.sync import ExperimentRunner
from rdmc.sinks.memory import MemorySink

pytestmark = pytest.mark.slow

REPLICATIONS = int(os.getenv('RDMC_ACCEPTANCE_REPLICATIONS', '5'))
SMALL = dict(n=150, p=100, rank=10, stopping='liberal', holdout_replications=3)


def run(config: ExperimentConfig,
        data: Optional[RatingData] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    sink, diagnostics = MemorySink(), MemorySink()
    ExperimentRunner(Experiment(config, data), sink, diagnostics_sink=diagnostics).run()
    return pd.DataFrame(sink.records), pd.DataFrame(diagnostics.records)


def median_value(records: pd.DataFrame, method: str, loss: Optional[str] = None,
                 **columns) -> float:
    selected = records['method'] == method
    if loss is not None:
        selected &= records['loss'] == loss
    for column, value in columns.items():
        selected &= records[column] == value

    assert selected.any()
    return float(records.loc[selected, 'value'].median())


def test_recommender_completion():
    config = ExperimentConfig(name='completion', replications=REPLICATIONS, seed=1,
                              methods=['rdmc', 'si', 'si-discretized'], n_categories=10,
                              missingness='MNAR', **SMALL)
    records, _ = run(config)
    rdmc = median_value(records, 'rdmc', 'phuber')
    assert rdmc < median_value(records, 'si')
    assert rdmc < median_value(records, 'si-discretized')


def test_recommender_attacks():
    config = ExperimentConfig(name='attacks', replications=REPLICATIONS, seed=2,
                              methods=['rdmc', 'si'], n_categories=[5, 10], missingness='MNAR',
                              attacks=['average', 'reverse-bandwagon', 'love-hate'], epsilon=0.2,
                              **SMALL)
    records, _ = run(config)
    for n_categories in (5, 10):
        for attack in ('average', 'reverse-bandwagon', 'love-hate'):
            rdmc = median_value(records, 'rdmc', 'phuber', n_categories=n_categories,
                                attack=attack)
            si = median_value(records, 'si', n_categories=n_categories, attack=attack)
            assert abs(rdmc) < abs(si)
            assert abs(rdmc) <= 0.3

    assert median_value(records, 'si', n_categories=10, attack='average') <= -1


def test_survey_careless_respondents():
    config = ExperimentConfig(name='survey', design='survey', replications=REPLICATIONS,
                              seed=3, methods=['rdmc', 'si-discretized'], losses='truncated',
                              n=150, constructs=10, items_per_construct=8, n_categories=7,
                              abandonment=0.2, careless=0.2, stopping='liberal',
                              holdout_replications=3)
    records, _ = run(config)
    assert median_value(records, 'rdmc', 'truncated') <= \
        median_value(records, 'si-discretized')


@pytest.fixture(scope='module')
def movielens(movielens_path: Path) -> RatingData:
    return read_dataset(DatasetDescriptor(path=movielens_path, min_ratings=20))


def movielens_config(**kwargs) -> ExperimentConfig:
    return ExperimentConfig(name='movielens', design='dataset', data_path='u.data',
                            replications=1, min_ratings=20, **kwargs)


@pytest.mark.movielens
def test_movielens_completion(movielens: RatingData):
    config = movielens_config(seed=4, methods=['rdmc', 'si', 'si-discretized', 'median',
                                               'mode'],
                              stopping='liberal')
    records, _ = run(config, movielens)
    rdmc = median_value(records, 'rdmc', 'phuber')
    si = median_value(records, 'si')
    si_discretized = median_value(records, 'si-discretized')
    assert 0.66 <= si_discretized <= 0.72
    assert 0.70 <= rdmc <= 0.75
    assert 0.70 <= si <= 0.75
    for baseline in ('median', 'mode'):
        assert si_discretized < median_value(records, baseline)
        assert rdmc < median_value(records, baseline)


@pytest.mark.movielens
def test_movielens_attacks(movielens: RatingData):
    epsilons = (0.10, 0.15, 0.20)
    config = movielens_config(seed=5, methods=['rdmc', 'si'],
                              attacks=['average', 'reverse-bandwagon', 'love-hate'],
                              epsilon=epsilons, stopping='liberal', holdout_replications=3)
    records, _ = run(config, movielens)
    for attack in ('average', 'reverse-bandwagon', 'love-hate'):
        si_shifts = []
        for epsilon in epsilons:
            rdmc = median_value(records, 'rdmc', 'phuber', attack=attack, epsilon=epsilon)
            si = median_value(records, 'si', attack=attack, epsilon=epsilon)
            assert abs(rdmc) <= 0.3
            assert si < rdmc
            si_shifts.append(abs(si))

        assert (np.diff(si_shifts) >= 0).all()


@pytest.mark.movielens
def test_movielens_stopping(movielens: RatingData):
    config = movielens_config(seed=6, methods=['rdmc'], stopping=['liberal', 'strict'])
    records, diagnostics = run(config, movielens)
    fits = diagnostics[diagnostics['phase'] == 'validation']
    liberal = fits.loc[fits['stopping'] == 'liberal', 'wall_time_ms'].mean()
    strict = fits.loc[fits['stopping'] == 'strict', 'wall_time_ms'].mean()
    assert strict >= 2 * liberal
    assert abs(median_value(records, 'rdmc', stopping='liberal') -
               median_value(records, 'rdmc', stopping='strict')) <= 0.02
