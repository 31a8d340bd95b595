from typing import Optional

from ..abc import Completer, Loss
from ..marshalling import callable_from_ref
from ..policies import StoppingPolicy
from ..util import SeedLike
from .baselines import DiscretizedMedianImputer, MedianImputer, ModeImputer
from .rdmc import RDMC
from .softimpute import SoftImpute

#: method names accepted by :func:`create_method`
METHOD_NAMES = ('rdmc', 'si', 'si-discretized', 'median', 'median-discretized', 'mode')


def create_method(name: str, loss: Optional[Loss] = None,
                  stopping: StoppingPolicy = StoppingPolicy.strict,
                  seed: SeedLike = None) -> Completer:
    """
    Create a completion method from its configuration name.

    A name containing ``:`` is treated as a reference to a callable (``package.module:factory``)
    that is called without arguments and must return a :class:`~rdmc.abc.Completer`.

    :param name: one of :data:`METHOD_NAMES` or a callable reference
    :param loss: robust loss of RDMC
    :param stopping: stopping policy of the iterative methods
    :param seed: seed of the randomized baselines
    :raises ValueError: on an unknown method name
    :raises TypeError: if a referenced factory does not return a completer
    """
    if ':' in name:
        method = callable_from_ref(name)()
        if not isinstance(method, Completer):
            raise TypeError(f'{name} returned {method.__class__.__qualname__} instead of a '
                            f'Completer')

        return method

    stopping = StoppingPolicy(stopping)
    if name == 'rdmc':
        return RDMC(loss, stopping)
    elif name == 'si':
        return SoftImpute(stopping)
    elif name == 'si-discretized':
        return SoftImpute(stopping, discretize=True)
    elif name == 'median':
        return MedianImputer()
    elif name == 'median-discretized':
        return DiscretizedMedianImputer(seed)
    elif name == 'mode':
        return ModeImputer(seed)

    raise ValueError(f'Unknown method {name!r} (expected one of {", ".join(METHOD_NAMES)})')


__all__ = ('DiscretizedMedianImputer', 'METHOD_NAMES', 'MedianImputer', 'ModeImputer', 'RDMC',
           'SoftImpute', 'create_method')
