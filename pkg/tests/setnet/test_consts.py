import pytest

from setnet.consts import ActivationKind, Const, ExitCode, ModelMode


def test_const_class_behaves_like_a_dict():
    assert ModelMode.SET == "set"
    assert list(ModelMode.keys()) == ["SET", "FIXPROB", "DENSE"]
    assert ModelMode.values_list() == ["set", "fixprob", "dense"]
    assert dict(ModelMode.items())["DENSE"] == "dense"
    assert "SRELU" in ActivationKind
    assert len(ExitCode) == 3
    assert ModelMode.get("NOPE", "x") == "x"


def test_const_check():
    assert ModelMode.check("fixprob") == "fixprob"
    with pytest.raises(ValueError, match="Unknown model mode 'sparse'"):
        ModelMode.check("sparse", "model mode")


def test_const_cannot_be_instanced():
    with pytest.raises(RuntimeError):
        ModelMode()


def test_const_inheritance_and_types():
    class Parent(Const, allowed_types=str):
        A = "a"

    class Child(Parent, allowed_types=str):
        B = "b"

    assert Child.values_list() == ["a", "b"]
    assert Parent.values_list() == ["a"]

    with pytest.raises(TypeError):

        class Broken(Const, allowed_types=str):  # pylint: disable=unused-variable
            C = 3
