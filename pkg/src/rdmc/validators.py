from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple, Type, TypeVar

from .exceptions import DeserializationError

T_Enum = TypeVar('T_Enum', bound=Enum)


def positive_number(instance, attribute, value) -> None:
    if value <= 0:
        raise ValueError(f'{attribute.name} must be positive, got {value} instead')


def non_negative_number(instance, attribute, value) -> None:
    if value < 0:
        raise ValueError(f'{attribute.name} must be non-negative, got {value} instead')


def greater_than_one(instance, attribute, value) -> None:
    if value <= 1:
        raise ValueError(f'{attribute.name} must be greater than 1, got {value} instead')


def open_fraction(instance, attribute, value) -> None:
    if not 0 < value < 1:
        raise ValueError(f'{attribute.name} must lie strictly between 0 and 1, got {value}')


def half_open_fraction(instance, attribute, value) -> None:
    if not 0 <= value < 1:
        raise ValueError(f'{attribute.name} must lie in [0, 1), got {value}')


def unit_fraction(instance, attribute, value) -> None:
    if not 0 < value <= 1:
        raise ValueError(f'{attribute.name} must lie in (0, 1], got {value}')


def each(validator: Callable) -> Callable:
    """Apply ``validator`` to every element of an iterable attribute."""
    def validate(instance, attribute, value) -> None:
        for element in value:
            validator(instance, attribute, element)

    return validate


def non_empty(instance, attribute, value) -> None:
    if not value:
        raise ValueError(f'{attribute.name} must not be empty')


def as_positive_integer(value, name: str) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        if value > 0:
            return value
        else:
            raise ValueError(f'{name} must be positive')

    raise TypeError(f'{name} must be an integer, got {value.__class__.__name__} instead')


def as_enum(enum_class: Type[T_Enum]) -> Callable[[Any], T_Enum]:
    """Return a converter that accepts enum members, their values or their names."""
    def convert(value) -> T_Enum:
        if isinstance(value, enum_class):
            return value

        try:
            return enum_class(value)
        except ValueError:
            pass

        try:
            return enum_class[str(value).replace('-', '_')]
        except KeyError:
            choices = ', '.join(repr(member.value) for member in enum_class)
            raise ValueError(f'{value!r} is not a valid {enum_class.__name__} '
                             f'(expected one of {choices})') from None

    return convert


def as_tuple_of(converter: Optional[Callable] = None) -> Callable[[Any], Tuple]:
    """
    Return a converter producing a tuple.

    Scalars (and strings) are wrapped into a one-element tuple, so configuration files may give
    either a single value or a list.
    """
    def convert(value) -> Tuple:
        if isinstance(value, (str, bytes)) or not hasattr(value, '__iter__'):
            value = (value,)

        return tuple(converter(element) if converter else element for element in value)

    return convert


def require_state_version(obj, state: Dict[str, Any], max_version: int) -> None:
    try:
        if state['version'] > max_version:
            raise DeserializationError(
                f'{obj.__class__.__name__} received a serialized state with version '
                f'{state["version"]}, but it only supports up to version {max_version}. '
                f'This can happen when an older version of RDMC is used to read metadata '
                f'written by a newer version.'
            )
    except KeyError as exc:
        raise DeserializationError('Missing "version" key in the serialized state') from exc
