import json

import numpy as np

from utils.errors import ConfigError, LibraryFormatError, PushcastError, RescaleLimitError, SimulationError
from utils.rng import derive_seed, make_rng, spawn
from utils.serialization import content_hash, dumps, read_json, write_json


def test_named_streams_are_stable_and_distinct():
    assert derive_seed(0, "push", "cube", "a0", 1) == derive_seed(0, "push", "cube", "a0", 1)
    assert derive_seed(0, "push", "cube", "a0", 1) != derive_seed(0, "push", "cube", "a0", 2)
    assert derive_seed(0, "x") != derive_seed(1, "x")
    np.testing.assert_array_equal(make_rng(3, "a").random(4), make_rng(3, "a").random(4))


def test_spawned_streams_follow_the_parent():
    a = spawn(make_rng(5, "p"), "child").random(3)
    b = spawn(make_rng(5, "p"), "child").random(3)
    c = spawn(make_rng(5, "p"), "other").random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_json_is_canonical(tmp_path):
    data = {"b": np.float64(0.1), "a": np.arange(3), "c": [np.int64(2)]}
    text = dumps(data)
    assert text.index('"a"') < text.index('"b"')
    path = write_json(data, tmp_path / "nested" / "data.json")
    assert read_json(path) == {"a": [0, 1, 2], "b": 0.1, "c": [2]}
    assert json.loads(text)["b"] == 0.1


def test_content_hash_ignores_key_order():
    assert content_hash({"a": 1, "b": [1.5]}) == content_hash({"b": [1.5], "a": 1})
    assert content_hash({"a": 1}) != content_hash({"a": 2})


def test_exit_codes():
    assert ConfigError("bad").exit_code == 2
    assert LibraryFormatError("old").exit_code == 2
    assert SimulationError("tipped").exit_code == 1
    assert issubclass(RescaleLimitError, PushcastError)
    err = ConfigError("Unknown config key", key="query.x", line=4)
    assert "query.x" in str(err)
    assert "line 4" in str(err)
