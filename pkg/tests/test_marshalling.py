import sys
from functools import partial
from types import ModuleType

import pytest

from rdmc.exceptions import DeserializationError, SerializationError
from rdmc.losses import PseudoHuberLoss, TruncatedAbsoluteLoss
from rdmc.marshalling import (
    callable_from_ref, callable_to_ref, marshal_object, unmarshal_object)
from rdmc.methods.rdmc import RDMC


class DummyClass:
    def meth(self):
        pass

    @staticmethod
    def staticmeth():
        pass

    @classmethod
    def classmeth(cls):
        pass

    class InnerDummyClass:
        @classmethod
        def innerclassmeth(cls):
            pass


class InheritedDummyClass(DummyClass):
    @classmethod
    def classmeth(cls):
        pass


class TestCallableToRef:
    @pytest.mark.parametrize('obj, error', [
        (partial(DummyClass.meth), 'Cannot create a reference to a partial()'),
        (lambda: None, 'Cannot create a reference to a lambda')
    ], ids=['partial', 'lambda'])
    def test_errors(self, obj, error):
        exc = pytest.raises(SerializationError, callable_to_ref, obj)
        assert str(exc.value) == error

    def test_nested_function_error(self):
        def nested():
            pass

        exc = pytest.raises(SerializationError, callable_to_ref, nested)
        assert str(exc.value) == 'Cannot create a reference to a nested function'

    @pytest.mark.parametrize('input,expected', [
        (DummyClass.meth, 'test_marshalling:DummyClass.meth'),
        (DummyClass.classmeth, 'test_marshalling:DummyClass.classmeth'),
        (DummyClass.InnerDummyClass.innerclassmeth,
         'test_marshalling:DummyClass.InnerDummyClass.innerclassmeth'),
        (DummyClass.staticmeth, 'test_marshalling:DummyClass.staticmeth'),
        (InheritedDummyClass.classmeth, 'test_marshalling:InheritedDummyClass.classmeth'),
        (RDMC, 'rdmc.methods.rdmc:RDMC'),
    ], ids=['unbound method', 'class method', 'inner class method', 'static method',
            'inherited class method', 'completer class'])
    def test_valid_refs(self, input, expected):
        assert callable_to_ref(input) == expected


class TestCallableFromRef:
    def test_valid_ref(self):
        assert callable_from_ref('rdmc.losses:create_loss').__name__ == 'create_loss'

    def test_round_trip(self):
        assert callable_from_ref(callable_to_ref(RDMC)) is RDMC

    def test_complex_path(self):
        pkg1 = ModuleType('rdmcpkg1')
        pkg2 = ModuleType('rdmcpkg1.pkg2')
        pkg2.factory = lambda: None
        sys.modules['rdmcpkg1'] = pkg1
        sys.modules['rdmcpkg1.pkg2'] = pkg2
        assert callable_from_ref('rdmcpkg1.pkg2:factory') == pkg2.factory

    @pytest.mark.parametrize('input,error', [
        ('module', ValueError),
        ('rdmc_no_such_module:blah', LookupError),
        ('rdmc.losses:no_such_loss', DeserializationError),
        ('math:pi', DeserializationError)
    ], ids=['module', 'missing module', 'missing attribute', 'not callable'])
    def test_lookup_error(self, input, error):
        pytest.raises(error, callable_from_ref, input)

    def test_not_callable_message(self):
        pytest.raises(DeserializationError, callable_from_ref, 'math:pi').match(
            'points to an object of type float which is not callable')


class TestMarshalObject:
    @pytest.mark.parametrize('loss', [
        PseudoHuberLoss(0.5),
        TruncatedAbsoluteLoss(2)
    ], ids=['phuber', 'truncated'])
    def test_loss_round_trip(self, loss):
        ref, state = marshal_object(loss)
        assert ref == f'{type(loss).__module__}:{type(loss).__qualname__}'
        restored = unmarshal_object(ref, state)
        assert type(restored) is type(loss)
        assert restored.tau == loss.tau
        assert restored.evaluate(1.7) == loss.evaluate(1.7)
