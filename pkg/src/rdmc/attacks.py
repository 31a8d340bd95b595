"""
Profile injection attacks.

Fake users are appended to a rating matrix to demote (nuke) a target item. Every fake profile
rates the target with the lowest category and a random set of filler items with ratings that
depend on the attack scheme:

* ``average``: each filler item gets its most frequent observed rating
* ``reverse-bandwagon``: fillers and a fixed set of widely rated, unpopular items get the lowest
  rating
* ``love-hate``: fillers get the highest rating
"""
from __future__ import annotations

import logging
from typing import Dict, List, Optional, Union

import attr
import numpy as np

from .enums import AttackScheme, TargetMode
from .exceptions import AttackError, TargetSelectionError
from .methods.baselines import column_modes
from .structures import AttackResult, SimTruth, SparseRatingMatrix
from .util import SeedLike, as_generator, round_half_up
from .validators import as_enum, non_negative_number, positive_number, unit_fraction

logger = logging.getLogger(__name__)

#: threshold on the mean shift, relative to its bound, for target candidates in simulations
SHIFT_THRESHOLD = 0.9


def _attack_scheme(value) -> AttackScheme:
    scheme = as_enum(AttackScheme)(value)
    if scheme is AttackScheme.none:
        raise ValueError('An attack specification needs an actual attack scheme')

    return scheme


@attr.define(frozen=True, kw_only=True)
class AttackSpec:
    """
    Specification of a nuke attack.

    :param scheme: the attack scheme
    :param epsilon: number of fake profiles relative to the number of observed ratings of the
        target item
    :param filler_fraction: number of filler items per fake profile relative to the number of
        items
    :param selected_fraction: number of selected items (reverse bandwagon only) relative to the
        number of items
    :param unpopular_threshold: minimum number of observed ratings of a selected item
    :param seed: seed of the random choices
    """

    scheme: AttackScheme = attr.field(converter=_attack_scheme)
    epsilon: float = attr.field(default=0.2, validator=positive_number)
    filler_fraction: float = attr.field(default=0.1, validator=unit_fraction)
    selected_fraction: float = attr.field(default=0.1, validator=unit_fraction)
    unpopular_threshold: int = attr.field(default=20, validator=non_negative_number)
    seed: Optional[int] = None


def select_target(source: Union[SimTruth, SparseRatingMatrix],
                  mode: Optional[TargetMode] = None, top_fraction: float = 0.1,
                  min_ratings: int = 0) -> int:
    """
    Choose the item to attack.

    In simulation mode, the candidates are the items whose mean shift exceeds 0.9 times its
    bound. In empirical mode, they are the items whose number of observed ratings lies in the
    top ``top_fraction`` of all items and is at least ``min_ratings``. The candidate with the
    highest mean observed rating is returned, ties going to the smaller column index.

    :param source: simulated ground truth, or the observed matrix (empirical mode only)
    :param mode: defaults to simulation mode for simulated data and empirical mode otherwise
    :raises TargetSelectionError: if no item qualifies
    """
    if mode is None:
        mode = TargetMode.simulation if isinstance(source, SimTruth) else TargetMode.empirical
    else:
        mode = as_enum(TargetMode)(mode)

    matrix = source.observed if isinstance(source, SimTruth) else source
    counts = matrix.observed_counts()
    if mode is TargetMode.simulation:
        if not isinstance(source, SimTruth):
            raise TypeError('Simulation mode target selection needs the simulated ground truth')

        candidates = source.shifts > SHIFT_THRESHOLD * source.s_max
    else:
        candidates = (counts >= np.quantile(counts, 1 - top_fraction)) & (counts >= min_ratings)

    candidates &= counts > 0
    if not candidates.any():
        raise TargetSelectionError(f'No item qualifies as an attack target in {mode.value} mode')

    means = np.where(candidates, matrix.column_means(), -np.inf)
    target = int(np.argmax(means))
    logger.debug('Selected item %d (mean rating %.3f, %d ratings) as the attack target', target,
                 means[target], counts[target])
    return target


def selected_items(matrix: SparseRatingMatrix, target: int, count: int,
                   threshold: int) -> np.ndarray:
    """
    Return the ``count`` items with the lowest mean rating among those with at least
    ``threshold`` observed ratings, excluding the target.

    :raises AttackError: if fewer than ``count`` items are eligible
    """
    eligible = matrix.observed_counts() >= max(threshold, 1)
    eligible[target] = False
    if eligible.sum() < count:
        raise AttackError(f'Only {eligible.sum()} items have at least {threshold} ratings, but '
                          f'the attack needs {count} selected items')

    means = np.where(eligible, matrix.column_means(), np.inf)
    return np.sort(np.argsort(means, kind='stable')[:count])


def forge_profiles(matrix: SparseRatingMatrix, target: int, spec: AttackSpec,
                   seed: SeedLike = None) -> AttackResult:
    """
    Append fake profiles attacking ``target`` to ``matrix``.

    :param seed: seed of the random choices (``spec.seed`` by default)
    :raises AttackError: if the attack cannot be carried out as specified
    """
    if not 0 <= target < matrix.p:
        raise IndexError(f'Target column {target} is out of range')

    rng = as_generator(spec.seed if seed is None else seed)
    scale = matrix.scale
    counts = matrix.observed_counts()
    n_fake = round_half_up(spec.epsilon * counts[target])
    if n_fake < 1:
        raise AttackError(f'An attack size of {spec.epsilon} on {counts[target]} ratings yields '
                          f'no fake profiles')

    n_filler = round_half_up(spec.filler_fraction * matrix.p)
    if spec.scheme is AttackScheme.reverse_bandwagon:
        n_selected = round_half_up(spec.selected_fraction * matrix.p)
        selected = selected_items(matrix, target, n_selected, spec.unpopular_threshold)
    else:
        selected = np.empty(0, dtype=np.int64)

    pool = np.ones(matrix.p, dtype=bool)
    pool[target] = False
    pool[selected] = False
    if spec.scheme is AttackScheme.average:
        pool &= counts > 0

    pool = np.flatnonzero(pool)
    modes: Dict[int, np.ndarray] = {}
    if pool.size < n_filler:
        raise AttackError(f'Only {pool.size} items are available as fillers, but every profile '
                          f'needs {n_filler}')

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    values: List[np.ndarray] = []
    fillers = []
    for fake in range(n_fake):
        filler = np.sort(rng.choice(pool, n_filler, replace=False))
        fillers.append(filler)
        if spec.scheme is AttackScheme.average:
            filler_values = np.empty(n_filler)
            for position, column in enumerate(filler):
                if column not in modes:
                    modes[column] = column_modes(matrix, column)

                candidates = modes[column]
                filler_values[position] = candidates[0] if candidates.size == 1 \
                    else rng.choice(candidates)
        elif spec.scheme is AttackScheme.love_hate:
            filler_values = scale.maximum[filler]
        else:
            filler_values = scale.minimum[filler]

        profile_cols = np.concatenate([[target], selected, filler])
        rows.append(np.full(profile_cols.size, fake))
        cols.append(profile_cols)
        values.append(np.concatenate([[scale.minimum[target]], scale.minimum[selected],
                                      filler_values]))

    attacked = matrix.append_rows(n_fake, np.concatenate(rows), np.concatenate(cols),
                                  np.concatenate(values))
    logger.info('Injected %d %s profiles against item %d', n_fake, spec.scheme.value, target)
    return AttackResult(matrix=attacked, target=target, n_fake=n_fake, original_rows=matrix.n,
                        filler_columns=tuple(fillers), selected_columns=selected)
