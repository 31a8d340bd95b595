import numpy as np

from ..abc import Loss
from ..validators import require_state_version


class TruncatedAbsoluteLoss(Loss):
    """
    The absolute loss truncated at ``tau``: ``min(|y|, tau)``.

    Use :meth:`for_scale` to truncate at half the range of a ``K``-category scale.

    :param tau: the largest loss any single residual can incur
    """

    __slots__ = 'tau'

    name = 'truncated'

    def __init__(self, tau: float):
        self.tau = float(tau)
        if self.tau <= 0:
            raise ValueError('tau must be positive')

    @classmethod
    def for_scale(cls, n_categories: int) -> 'TruncatedAbsoluteLoss':
        """Return the loss truncated at ``(n_categories - 1) / 2``."""
        return cls((n_categories - 1) / 2)

    def __call__(self, residuals: np.ndarray) -> np.ndarray:
        return np.minimum(np.abs(np.asarray(residuals, dtype=float)), self.tau)

    def __getstate__(self):
        return {'version': 1, 'tau': self.tau}

    def __setstate__(self, state):
        require_state_version(self, state, 1)
        self.tau = state['tau']

    def __repr__(self):
        return f'{self.__class__.__name__}(tau={self.tau})'
