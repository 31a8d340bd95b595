from typing import Optional

from ..abc import Loss
from .absolute import AbsoluteLoss
from .phuber import PseudoHuberLoss
from .squared import SquaredLoss
from .truncated import TruncatedAbsoluteLoss

#: loss names accepted by :func:`create_loss`
LOSS_NAMES = ('phuber', 'absolute', 'truncated', 'squared')


def create_loss(name: str, tau: Optional[float] = None,
                n_categories: Optional[int] = None) -> Loss:
    """
    Create a loss function from its configuration name.

    :param name: one of ``phuber``, ``absolute``, ``truncated`` or ``squared``
    :param tau: tuning parameter (defaults to 1 for ``phuber`` and to half the range of the
        rating scale for ``truncated``)
    :param n_categories: number of rating categories, needed for the default ``truncated`` tau
    :raises ValueError: on an unknown name, or a missing ``tau`` for the truncated loss
    """
    if name == 'phuber':
        return PseudoHuberLoss(1.0 if tau is None else tau)
    elif name == 'absolute':
        return AbsoluteLoss()
    elif name == 'truncated':
        if tau is not None:
            return TruncatedAbsoluteLoss(tau)
        elif n_categories is None:
            raise ValueError('The truncated loss needs either tau or the number of categories')

        return TruncatedAbsoluteLoss.for_scale(n_categories)
    elif name == 'squared':
        return SquaredLoss()

    raise ValueError(f'Unknown loss {name!r} (expected one of {", ".join(LOSS_NAMES)})')


__all__ = ('AbsoluteLoss', 'LOSS_NAMES', 'PseudoHuberLoss', 'SquaredLoss',
           'TruncatedAbsoluteLoss', 'create_loss')
