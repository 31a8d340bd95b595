import numpy as np

from ..abc import Loss
from ..validators import require_state_version


class SquaredLoss(Loss):
    """The squared loss ``y^2 / 2``, the loss Soft-Impute fits."""

    __slots__ = ()

    name = 'squared'

    def __call__(self, residuals: np.ndarray) -> np.ndarray:
        return np.square(np.asarray(residuals, dtype=float)) / 2

    def __getstate__(self):
        return {'version': 1}

    def __setstate__(self, state):
        require_state_version(self, state, 1)

    def __repr__(self):
        return f'{self.__class__.__name__}()'
