import numpy as np

from ..abc import Loss
from ..validators import require_state_version


class PseudoHuberLoss(Loss):
    """
    The pseudo-Huber loss ``tau^2 * (sqrt(1 + (y / tau)^2) - 1)``.

    It behaves like ``y^2 / 2`` near zero and like ``tau * |y|`` in the tails. The default
    ``tau = 1`` ties the transition to the step size between rating categories.

    :param tau: transition point between the quadratic and the linear regime
    """

    __slots__ = 'tau'

    name = 'phuber'

    def __init__(self, tau: float = 1.0):
        self.tau = float(tau)
        if self.tau <= 0:
            raise ValueError('tau must be positive')

    def __call__(self, residuals: np.ndarray) -> np.ndarray:
        scaled = np.asarray(residuals, dtype=float) / self.tau
        return self.tau ** 2 * (np.sqrt(1 + scaled ** 2) - 1)

    def __getstate__(self):
        return {'version': 1, 'tau': self.tau}

    def __setstate__(self, state):
        require_state_version(self, state, 1)
        self.tau = state['tau']

    def __repr__(self):
        return f'{self.__class__.__name__}(tau={self.tau})'
