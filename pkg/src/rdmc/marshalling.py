"""Textual ``module:qualname`` references to losses and completion method factories."""
from functools import partial
from importlib import import_module
from typing import Any, Callable, Tuple

from .exceptions import DeserializationError, SerializationError


def marshal_object(obj) -> Tuple[str, Any]:
    """Return the class reference and versioned state of a loss (or any object with state)."""
    return callable_to_ref(obj.__class__), obj.__getstate__()


def unmarshal_object(ref: str, state):
    cls = callable_from_ref(ref)
    instance = cls.__new__(cls)
    instance.__setstate__(state)
    return instance


def callable_to_ref(func: Callable) -> str:
    """
    Build the ``module:qualname`` reference of a class or function.

    :raises SerializationError: if the reference could not be imported back (partials, lambdas,
        nested functions, objects lacking ``__module__`` or ``__qualname__``)

    """
    if isinstance(func, partial):
        raise SerializationError('Cannot create a reference to a partial()')

    module = getattr(func, '__module__', None)
    qualname = getattr(func, '__qualname__', None)
    if module is None or qualname is None:
        raise SerializationError(f'{func!r} lacks a module or qualified name')
    elif '<lambda>' in qualname:
        raise SerializationError('Cannot create a reference to a lambda')
    elif '<locals>' in qualname:
        raise SerializationError('Cannot create a reference to a nested function')

    return f'{module}:{qualname}'


def callable_from_ref(ref: str) -> Callable:
    """
    Resolve a ``module:qualname`` reference, like ``rdmc.methods.rdmc:RDMC``.

    :raises ValueError: if the reference has no ``:`` separator
    :raises LookupError: if the module cannot be imported
    :raises DeserializationError: if the attribute path is missing or leads to a non-callable

    """
    modulename, sep, qualname = ref.partition(':')
    if not sep:
        raise ValueError(f'Invalid reference: {ref}')

    try:
        obj = import_module(modulename)
    except ImportError:
        raise LookupError(f'Error resolving reference {ref!r}: could not import module')

    for name in qualname.split('.'):
        try:
            obj = getattr(obj, name)
        except AttributeError:
            raise DeserializationError(f'Error resolving reference {ref!r}: no attribute {name!r}')

    if not callable(obj):
        raise DeserializationError(f'{ref!r} points to an object of type '
                                   f'{obj.__class__.__qualname__} which is not callable')

    return obj
