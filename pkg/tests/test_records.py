import json

import jsonschema
import numpy as np
import pytest

from graspctx.modes import DetectionParams, ModeDecision, Mode, detect_mode
from graspctx.orientation import GravityEstimate
from graspctx.records import (SCHEMA_ID, check_timings, decision_record, dumps, error_record,
                              load_schema)

from test_modes import tabletop_cloud

DOWN = GravityEstimate([0.0, 0.0, -1.0])


@pytest.fixture(scope="module")
def validator():
    schema = load_schema()
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def test_schema_identity():
    assert load_schema()["$id"] == SCHEMA_ID


def test_ok_record_validates(validator):
    cloud = tabletop_cloud()
    timings = {}
    dec = detect_mode(cloud, DOWN, DetectionParams(), timings)
    timings["total"] = sum(timings.values())
    rec = decision_record("f1", dec, DOWN, len(cloud), timings)
    validator.validate(rec)
    check_timings(rec)
    assert rec["mode"] == "tabletop" and len(rec["objects"]) == 2
    assert rec["plane"]["orientation"] == "horizontal"


def test_unknown_record_validates(validator):
    rec = decision_record("f2", ModeDecision(Mode.UNKNOWN, 0.0), DOWN, 0, {"total": 0.1})
    validator.validate(rec)
    assert rec["plane"] is None and rec["objects"] == []


def test_error_record_validates(validator):
    validator.validate(error_record("f3", "io", "cannot read"))
    with pytest.raises(jsonschema.ValidationError):
        validator.validate(error_record("f3", "cosmic-ray", "?"))


def test_schema_rejects_malformed(validator):
    rec = decision_record("f4", ModeDecision(Mode.UNKNOWN, 0.0), DOWN, 0, {"total": 1.0})
    for mutate in (lambda r: r.update(confidence=1.5), lambda r: r.update(mode="couch"),
                   lambda r: r.pop("timings_ms"), lambda r: r["timings_ms"].update(total=-1),
                   lambda r: r.update(schema="other/1")):
        bad = json.loads(json.dumps(rec))
        mutate(bad)
        with pytest.raises(jsonschema.ValidationError):
            validator.validate(bad)


def test_check_timings():
    check_timings({"timings_ms": {"plane": 1.0, "total": 2.0}})
    with pytest.raises(AssertionError):
        check_timings({"timings_ms": {"plane": 3.0, "total": 2.0}})
    with pytest.raises(AssertionError):
        check_timings({"timings_ms": {"plane": -1.0, "total": 2.0}})


def test_dumps_is_canonical():
    rec = {"b": 1, "a": [0.1, 2.0], "timings_ms": {"total": 1.0}}
    assert dumps(rec) == '{"a":[0.1,2.0],"b":1,"timings_ms":{"total":1.0}}'
    assert dumps(rec, with_timings=False) == '{"a":[0.1,2.0],"b":1}'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})
    assert np.isfinite(json.loads(dumps(rec))["a"][0])
