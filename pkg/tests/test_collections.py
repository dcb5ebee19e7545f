import pytest

from learnmmse.collections import *
from learnmmse.errors import ConfigurationError


def test_deep_update():
    src = {"a": {"b": {"c": 5}}}
    dst = {"a": {"b": {"d": 6}}}

    assert deep_update(src, dst) == {"a": {"b": {"c": 5, "d": 6}}}


def test_deep_update_strict_names_the_dotted_key():
    dst = {"train": {"epochs": 20}, "seed": 0}

    assert deep_update({"train": {"epochs": 3}}, dst, strict=True) == {
        "train": {"epochs": 3},
        "seed": 0,
    }

    with pytest.raises(ConfigurationError, match="train.epoch"):
        deep_update({"train": {"epoch": 3}}, dst, strict=True)


def test_deep_update_replaces_null_leaves():
    dst = {"snr": {"values": None}}
    assert deep_update({"snr": {"values": [1.0, 2.0]}}, dst, strict=True) == {
        "snr": {"values": [1.0, 2.0]}
    }


def test_nested_set():
    tree = {"a": {"b": 1}, "c": 2}
    assert nested_set(tree, "a.b", 5) == {"a": {"b": 5}, "c": 2}
    assert nested_set(tree, "c", [1]) == {"a": {"b": 5}, "c": [1]}

    with pytest.raises(ConfigurationError):
        nested_set(tree, "a.missing", 1)

    with pytest.raises(ConfigurationError):
        nested_set(tree, "c.b", 1)


@pytest.mark.parametrize(
    ("expression", "key", "value"),
    [
        ("train.epochs=5", "train.epochs", 5),
        ("snr.values=[0, 2.5]", "snr.values", [0, 2.5]),
        ("source=data.chn", "source", "data.chn"),
        ("cache.enabled=false", "cache.enabled", False),
        ("model.n_grid=null", "model.n_grid", None),
        ("output=a=b.csv", "output", "a=b.csv"),
    ],
)
def test_parse_override(expression, key, value):
    assert parse_override(expression) == (key, value)


def test_parse_override_needs_an_assignment():
    with pytest.raises(ConfigurationError):
        parse_override("train.epochs")
