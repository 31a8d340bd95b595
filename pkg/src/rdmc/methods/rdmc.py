"""
Robust discrete matrix completion (RDMC).

The solver minimizes ``||P(X) - P(L)||_rho + lambda * ||Z||_*`` subject to ``L = Z`` and every
``L_ij`` being a category of column ``j``, with ADMM on the augmented Lagrangian

    ||P(X) - P(L)||_rho + lambda * ||Z||_* + <Theta, L - Z> + mu / 2 * ||L - Z||_F^2

where ``P`` projects onto the observed cells and ``X`` is the median-centered rating matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import attr
import numpy as np
from scipy import linalg

from ..abc import Completer, Loss
from ..exceptions import NonFiniteInputError, SolverDivergedError
from ..losses import PseudoHuberLoss
from ..policies import StoppingPolicy
from ..ratings import assemble_completion, center
from ..selection import lambda_grid
from ..structures import CenteredMatrix, Diagnostics, Fit, SparseRatingMatrix
from ..util import Stopwatch
from ..validators import greater_than_one, non_negative_number, positive_number

logger = logging.getLogger(__name__)

#: absolute tolerance under which two candidate objective values count as tied
TIE_TOLERANCE = 1e-12


@attr.define(frozen=True, kw_only=True)
class SolverConfig:
    """
    Parameters of a single RDMC fit.

    :param lambda_: nuclear norm penalty
    :param loss: robust loss on the observed cells
    :param mu: initial penalty parameter of the augmented Lagrangian
    :param delta: factor by which ``mu`` grows after every iteration
    :param tol: threshold on the relative change of the objective
    :param max_iterations: maximum number of iterations
    """

    lambda_: float = attr.field(default=0.0, validator=non_negative_number)
    loss: Loss = attr.field(factory=PseudoHuberLoss, validator=attr.validators.instance_of(Loss))
    mu: float = attr.field(default=0.1, validator=positive_number)
    delta: float = attr.field(default=1.05, validator=greater_than_one)
    tol: float = attr.field(default=1e-4, validator=positive_number)
    max_iterations: int = attr.field(default=100, validator=[attr.validators.instance_of(int),
                                                              positive_number])

    @classmethod
    def for_stopping(cls, policy: StoppingPolicy, **kwargs) -> SolverConfig:
        """Return a configuration with the iteration limit of the given stopping policy."""
        return cls(max_iterations=StoppingPolicy(policy).rdmc_max_iterations, **kwargs)


@dataclass
class SolverState:
    """
    The ADMM iterate.

    ``mu`` is always ``mu0 * delta ** iteration`` where ``iteration`` counts the multiplier
    updates done so far. ``singular_values`` holds the singular values of ``Z`` when known.
    """

    L: np.ndarray
    Z: np.ndarray
    theta: np.ndarray
    mu0: float = 0.1
    delta: float = 1.05
    iteration: int = 0
    losses: List[float] = field(default_factory=list)
    singular_values: Optional[np.ndarray] = None

    @property
    def mu(self) -> float:
        return self.mu0 * self.delta ** self.iteration

    def nuclear_norm(self) -> float:
        if self.singular_values is None:
            return float(linalg.svdvals(self.Z, check_finite=False).sum())

        return float(self.singular_values.sum())

    def summary(self) -> dict:
        return {'mu': self.mu, 'L_norm': float(np.linalg.norm(self.L)),
                'Z_norm': float(np.linalg.norm(self.Z)),
                'theta_norm': float(np.linalg.norm(self.theta)),
                'last_loss': self.losses[-1] if self.losses else None}


class PathPoint(NamedTuple):
    lambda_: float
    L: np.ndarray
    diagnostics: Diagnostics


def _svd(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return linalg.svd(matrix, full_matrices=False, check_finite=False)
    except linalg.LinAlgError:
        logger.debug('gesdd did not converge; retrying the SVD with gesvd')
        return linalg.svd(matrix, full_matrices=False, check_finite=False,
                          lapack_driver='gesvd')


def shrink_singular_values(matrix: np.ndarray,
                           threshold: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Soft-threshold the singular values of ``matrix``.

    This is the proximal operator of ``threshold * ||.||_*``.

    :return: the shrunk matrix and its singular values (in descending order)
    :raises NonFiniteInputError: if ``matrix`` contains NaN or infinite cells
    """
    finite = np.isfinite(matrix)
    if not finite.all():
        row, column = np.argwhere(~finite)[0]
        raise NonFiniteInputError(int(row), int(column), float(matrix[row, column]))

    if threshold <= 0:
        return matrix.copy(), linalg.svdvals(matrix, check_finite=False)

    u, d, vt = _svd(matrix)
    shrunk = np.maximum(d - threshold, 0)
    rank = np.count_nonzero(shrunk)
    return (u[:, :rank] * shrunk[:rank]) @ vt[:rank], shrunk


def update_Z(state: SolverState, lambda_: float) -> np.ndarray:
    """Return the minimizer of ``1/2 ||L + Theta/mu - Z||_F^2 + lambda/mu ||Z||_*``."""
    return shrink_singular_values(state.L + state.theta / state.mu, lambda_ / state.mu)[0]


def update_L(state: SolverState, centered: CenteredMatrix, loss: Loss) -> np.ndarray:
    """
    Return the cell-wise minimizer over the rating categories.

    Observed cells minimize ``rho(c - X_ij) + mu/2 * (c - Z_ij + Theta_ij/mu)^2`` over the
    categories ``c`` of their column, unobserved cells take the category nearest to
    ``Z_ij - Theta_ij/mu``. Ties go to the smallest category.
    """
    scale = centered.scale
    target = state.Z - state.theta / state.mu

    # Unobserved cells: nearest category, halfway points rounding down
    levels = np.clip(np.ceil(target + scale.offsets - 0.5), 1, scale.n_categories)
    completed = levels - scale.offsets

    rows, cols = centered.rows, centered.cols
    if rows.size:
        candidates = scale.grid()[cols]
        with np.errstate(invalid='ignore'):
            objective = loss(candidates - centered.values[:, None]) + \
                state.mu / 2 * (candidates - target[rows, cols][:, None]) ** 2

        objective[np.isnan(candidates)] = np.inf
        best = objective.min(axis=1, keepdims=True)
        choice = np.argmax(objective <= best + TIE_TOLERANCE, axis=1)
        completed[rows, cols] = candidates[np.arange(rows.size), choice]

    return completed


def update_multiplier(state: SolverState) -> SolverState:
    """Return the state after ``Theta <- Theta + mu (L - Z)`` followed by ``mu <- delta mu``."""
    theta = state.theta + state.mu * (state.L - state.Z)
    return replace(state, theta=theta, iteration=state.iteration + 1)


def objective(state: SolverState, centered: CenteredMatrix, loss: Loss,
              lambda_: float) -> float:
    """Return the value of the augmented Lagrangian at the given state."""
    residuals = centered.values - state.L[centered.rows, centered.cols]
    gap = state.L - state.Z
    return loss.matrix_loss(residuals) + lambda_ * state.nuclear_norm() + \
        float(np.vdot(state.theta, gap)) + state.mu / 2 * float(np.vdot(gap, gap))


def _run(centered: CenteredMatrix, config: SolverConfig, L: np.ndarray,
         theta: np.ndarray, warm_started: bool) -> Tuple[SolverState, Diagnostics]:
    state = SolverState(L=L, Z=np.zeros_like(L), theta=theta, mu0=config.mu,
                        delta=config.delta)
    previous = np.inf
    converged = False
    with Stopwatch() as stopwatch:
        while not converged and state.iteration < config.max_iterations:
            state.Z, state.singular_values = shrink_singular_values(
                state.L + state.theta / state.mu, config.lambda_ / state.mu)
            state.L = update_L(state, centered, config.loss)
            state = update_multiplier(state)
            loss = objective(state, centered, config.loss, config.lambda_)
            if not np.isfinite(loss):
                raise SolverDivergedError(state.iteration, state.summary())

            state.losses.append(loss)
            if state.iteration > 1:
                if previous == 0:
                    converged = loss == 0
                else:
                    converged = abs((loss - previous) / previous) <= config.tol

            logger.debug('lambda=%g iteration=%d loss=%.8g', config.lambda_, state.iteration,
                         loss)
            previous = loss

    diagnostics = Diagnostics(
        lambda_=config.lambda_, iterations=state.iteration, converged=converged,
        final_loss=state.losses[-1] if state.losses else float('nan'),
        wall_time_ms=stopwatch.elapsed_ms, warm_started=warm_started,
        losses=tuple(state.losses))
    return state, diagnostics


def solve(centered: CenteredMatrix, config: SolverConfig,
          warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None
          ) -> Tuple[np.ndarray, Diagnostics]:
    """
    Run the ADMM iterations for a single regularization parameter.

    Without a warm start, ``L`` starts at the observed centered values (zero elsewhere, i.e.
    median imputation) and ``Theta`` at zero.

    :param centered: the median-centered training matrix
    :param config: solver parameters
    :param warm_start: starting values for ``L`` and ``Theta``
    :return: the completed centered matrix and the diagnostics of the run
    :raises SolverDivergedError: if the objective becomes non-finite
    """
    if warm_start is None:
        L, theta = centered.dense(), np.zeros(centered.shape)
    else:
        L, theta = (np.array(matrix, dtype=float) for matrix in warm_start)
        if L.shape != centered.shape or theta.shape != centered.shape:
            raise ValueError(f'Warm start matrices must have the shape {centered.shape}')

    state, diagnostics = _run(centered, config, L, theta, warm_start is not None)
    return state.L, diagnostics


def solve_path(centered: CenteredMatrix, lambdas: Sequence[float],
               config: SolverConfig) -> List[PathPoint]:
    """
    Solve for an ascending sequence of regularization parameters.

    Every fit after the first starts from the ``L`` and ``Theta`` of the previous one, while
    ``mu`` restarts from its initial value.

    :raises ValueError: if ``lambdas`` is empty or not strictly increasing
    """
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if not lambdas.size:
        raise ValueError('At least one regularization parameter is required')
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError('The regularization parameters must be strictly increasing')

    path: List[PathPoint] = []
    L, theta = centered.dense(), np.zeros(centered.shape)
    for i, lambda_ in enumerate(lambdas):
        state, diagnostics = _run(centered, attr.evolve(config, lambda_=float(lambda_)), L,
                                  theta, i > 0)
        L, theta = state.L, state.theta
        path.append(PathPoint(float(lambda_), state.L, diagnostics))
        logger.debug('Solved lambda=%g in %d iterations (converged=%s)', lambda_,
                     diagnostics.iterations, diagnostics.converged)

    return path


class RDMC(Completer):
    """
    Robust discrete matrix completion.

    :param loss: the robust loss (pseudo-Huber with ``tau = 1`` by default)
    :param stopping: liberal (at most 10 iterations) or strict (at most 100) stopping
    :param config: full solver configuration, overriding ``loss`` and ``stopping``
    """

    tunable = True

    def __init__(self, loss: Optional[Loss] = None,
                 stopping: StoppingPolicy = StoppingPolicy.strict,
                 config: Optional[SolverConfig] = None):
        self.name = 'rdmc'
        self.config = config or SolverConfig.for_stopping(stopping,
                                                          loss=loss or PseudoHuberLoss())

    @property
    def validation_loss(self) -> Loss:
        return self.config.loss

    def lambda_grid(self, matrix: SparseRatingMatrix) -> np.ndarray:
        return lambda_grid(center(matrix).dense())

    def fit_path(self, matrix: SparseRatingMatrix, lambdas: Sequence[float]) -> List[Fit]:
        if not len(lambdas):
            raise ValueError(f'{self.name} needs a regularization parameter')

        centered = center(matrix)
        fits = []
        for point in solve_path(centered, lambdas, self.config):
            predictions = assemble_completion(point.L, centered, matrix)
            fits.append(Fit(self.name, predictions, predictions, point.lambda_,
                            point.diagnostics))

        return fits

    def __repr__(self):
        return f'{self.__class__.__name__}(loss={self.config.loss!r}, ' \
               f'max_iterations={self.config.max_iterations})'
