import numpy as np

from ..abc import Loss
from ..validators import require_state_version


class AbsoluteLoss(Loss):
    """The absolute loss ``|y|``."""

    __slots__ = ()

    name = 'absolute'

    def __call__(self, residuals: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(residuals, dtype=float))

    def __getstate__(self):
        return {'version': 1}

    def __setstate__(self, state):
        require_state_version(self, state, 1)

    def __repr__(self):
        return f'{self.__class__.__name__}()'
