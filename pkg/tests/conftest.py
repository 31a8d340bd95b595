import os
from pathlib import Path

import numpy as np
import pytest

from rdmc.abc import Serializer
from rdmc.serializers.json import JSONSerializer
from rdmc.structures import RatingScale, SparseRatingMatrix


@pytest.fixture
def serializer() -> Serializer:
    return JSONSerializer()


@pytest.fixture
def anyio_backend() -> 'str':
    return 'asyncio'


@pytest.fixture
def small_matrix() -> SparseRatingMatrix:
    """A 4x3 matrix on a 1..5 scale with one or two missing cells per column."""
    return SparseRatingMatrix.from_dense(np.array([
        [1, 5, np.nan],
        [2, np.nan, 3],
        [np.nan, 4, 3],
        [5, 2, 1]
    ]), RatingScale.uniform(5, 3))


@pytest.fixture
def random_matrix() -> SparseRatingMatrix:
    """A 30x20 matrix on a 1..5 scale with roughly 60% of the cells observed."""
    rng = np.random.default_rng(1234)
    signal = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 20))
    dense = np.clip(np.rint(3 + signal), 1, 5)
    dense[rng.random(dense.shape) < 0.4] = np.nan
    dense[0, :] = 3  # every column keeps at least one rating
    return SparseRatingMatrix.from_dense(dense, RatingScale.uniform(5, 20))


@pytest.fixture(scope='session')
def movielens_path() -> Path:
    path = os.environ.get('RDMC_MOVIELENS')
    if not path or not Path(path).is_file():
        pytest.skip('Set RDMC_MOVIELENS to the path of the MovieLens 100K u.data file')

    return Path(path)
