from dataclasses import dataclass, field
from enum import Enum
from json import dumps, loads
from typing import Any, Dict

import attr
import numpy as np

from ..abc import Loss, Serializer
from ..exceptions import DeserializationError, SerializationError
from ..marshalling import marshal_object, unmarshal_object


@dataclass
class JSONSerializer(Serializer):
    """
    Serializes run metadata to JSON.

    Numpy scalars and arrays become plain numbers and lists, enums their values. Losses are stored
    with a class reference under ``magic_key`` so they can be restored; attrs configuration
    classes become plain objects of their fields.
    """

    magic_key: str = '_rdmc_json'
    dump_options: Dict[str, Any] = field(default_factory=dict)
    load_options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.dump_options['default'] = self._default_hook
        self.load_options['object_hook'] = self._object_hook

    def _default_hook(self, obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.generic):
            return obj.item()
        elif isinstance(obj, Enum):
            return obj.value
        elif isinstance(obj, (set, frozenset)):
            return sorted(obj)
        elif isinstance(obj, Loss):
            cls_ref, state = marshal_object(obj)
            return {self.magic_key: [cls_ref, state]}
        elif attr.has(type(obj)):
            return attr.asdict(obj)

        raise TypeError(f'Object of type {obj.__class__.__name__!r} is not JSON serializable')

    def _object_hook(self, obj_state: Dict[str, Any]):
        if self.magic_key in obj_state:
            ref, *rest = obj_state[self.magic_key]
            return unmarshal_object(ref, *rest)

        return obj_state

    def serialize(self, obj) -> bytes:
        return self.serialize_to_unicode(obj).encode('utf-8')

    def deserialize(self, serialized: bytes):
        return self.deserialize_from_unicode(serialized.decode('utf-8'))

    def serialize_to_unicode(self, obj) -> str:
        try:
            return dumps(obj, ensure_ascii=False, **self.dump_options)
        except (TypeError, ValueError) as exc:
            raise SerializationError(str(exc)) from exc

    def deserialize_from_unicode(self, serialized: str):
        try:
            return loads(serialized, **self.load_options)
        except ValueError as exc:
            raise DeserializationError(str(exc)) from exc
