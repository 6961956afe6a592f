import copy
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from gevrey_bnf.engine import bnf_run
from gevrey_bnf.errors import ResonantMode, SchemaError
from gevrey_bnf.fourier import FourierSeries
from gevrey_bnf.problems import (
    bundled_path,
    dumps,
    load_problem,
    pendulum_problem,
    problem_from_dict,
    result_from_json,
    result_to_json,
    series_from_json,
    series_to_json,
)

BUNDLED = ["pendulum.json", "integrable.json", "golden2d.json"] + [
    f"pendulum_w{w}_eps{e}.json" for w in ("1", "phi") for e in ("0.1", "0.25", "0.5")]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_problems_load(name):
    p = load_problem(bundled_path(name))
    assert p.spec.dim in (1, 2)
    assert p.order >= 2


def test_pendulum_document_matches_bundle():
    assert json.loads(bundled_path("pendulum.json").read_text()) == pendulum_problem(1.0, 0.5)


def test_dumps_is_canonical():
    text = dumps({"b": 0.1, "a": [1, 2.0, float("nan")], "c": {"z": True, "y": None}})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert "[1, 2.0, null]" in text
    assert json.loads(text)["c"] == {"y": None, "z": True}


@settings(max_examples=100)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_round_trips_floats(x):
    assert json.loads(dumps([x]))[0] == x


def test_series_round_trip():
    u = FourierSeries.cos((1, -2), 0.3) + FourierSeries.sin((0, 1), 1 / 3)
    assert series_from_json(series_to_json(u)) == u


def test_result_round_trip(golden_spec):
    res = bnf_run(golden_spec, 4, retain_B=True)
    doc = json.loads(dumps(result_to_json(res, {"name": "x"})))
    back = result_from_json(doc)
    assert back.order == 4 and back.dim == 2
    for m in res.g.parts:
        for alpha, s in res.g.parts[m].items():
            assert back.g.parts[m][alpha] == s
    for m in range(2, 5):
        for alpha, s in res.R(m).items():
            assert back.R(m)[alpha] == s
    assert set(back.B_parts) == set(res.B_parts)
    assert back.divisor_log == res.divisor_log


def test_schema_errors():
    base = pendulum_problem()
    bad = copy.deepcopy(base)
    del bad["omega"]
    with pytest.raises(SchemaError):
        problem_from_dict(bad)
    bad = copy.deepcopy(base)
    bad["terms"][0]["alpha"] = [1]
    with pytest.raises(SchemaError):
        problem_from_dict(bad)
    bad = copy.deepcopy(base)
    bad["terms"][0]["alpha"] = [2, 0]
    with pytest.raises(SchemaError):
        problem_from_dict(bad)
    bad = copy.deepcopy(base)
    bad["terms"][0]["series"]["modes"][0]["re"] = 0.3
    with pytest.raises(SchemaError):
        problem_from_dict(bad)


def test_constant_term_is_dropped():
    doc = pendulum_problem()
    doc["terms"].append({"alpha": [0], "series": {"dim": 1, "real": True,
                                                  "modes": [{"k": [0], "re": 2.0, "im": 0.0}]}})
    p = problem_from_dict(doc)
    assert p.notes and set(p.spec.coeffs.parts) == {2}


def test_resonant_omega_is_rejected():
    doc = {"dim": 2, "omega": [1.0, 0.5], "terms": []}
    with pytest.raises(ResonantMode):
        problem_from_dict(doc)


def test_missing_file(tmp_path):
    with pytest.raises(SchemaError):
        load_problem(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(SchemaError):
        load_problem(tmp_path / "bad.json")
