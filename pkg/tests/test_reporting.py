import json
import math

import numpy as np
import pytest

from burgerslab.reporting import dumps, emit_report, fmt, normalize, result, write_csv


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(-0.0) == "0"
    assert fmt(float("nan")) == "nan" and fmt(-math.inf) == "-inf"
    assert fmt(np.float32(0.5)) == "0.5"


def test_normalize():
    data = {"a": np.arange(3), "b": (np.float64(1 / 3), None), "c": np.bool_(True), "d": math.nan}
    assert normalize(data) == {"a": [0, 1, 2], "b": [0.333333333333, None], "c": True, "d": None}
    with pytest.raises(TypeError):
        normalize({"x": object()})


def test_dumps_is_order_independent():
    assert dumps({"b": 1, "a": 2.0}) == dumps({"a": 2.0, "b": 1})
    assert dumps({"x": 1 / 3}) == dumps({"x": 1 / 3 + 1e-17})


def test_emit_report(tmp_path):
    results = [
        result("zeta", True, {"v": 1.0}),
        result("alpha", False, {"v": 2.0}, (["k", "value"], [(1, 0.5), (2, 1 / 3)])),
    ]
    path = tmp_path / "run.json"
    assert emit_report(results, path, {"seed": "1"}) is False
    doc = json.loads(path.read_text())
    assert set(doc) == {"tool_version", "config_echo", "results", "pass"}
    assert [r["name"] for r in doc["results"]] == ["alpha", "zeta"]
    assert doc["results"][0]["csv"] == "run_alpha.csv"
    assert (tmp_path / "run_alpha.csv").read_text() == "k,value\n1,0.5\n2,0.333333333333\n"
    first = path.read_bytes()
    emit_report(list(reversed(results)), path, {"seed": "1"})
    assert path.read_bytes() == first
    with pytest.raises(ValueError):
        emit_report([], path)


def test_write_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b"], [("x", np.float64(2.0)), ("y", "")])
    assert path.read_text() == "a,b\nx,2\ny,\n"
