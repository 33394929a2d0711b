import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gainbin import CV, MV, GainModel, ModelFormatError, dump_model, load_model, parse_model, save_model, validate_model
from gainbin.data import fixture_path

from conftest import CV_NAMES, MV_NAMES

DATA = Path(__file__).parent / "data"


def test_fixture_contents(raw_model):
    assert raw_model.shape == (8, 5)
    assert raw_model.mv_names == MV_NAMES
    assert raw_model.cv_names == CV_NAMES
    assert raw_model.delta_moves.tolist() == [2, 10, 2, 5, 10]
    assert raw_model.gain("AI-RVP-PV", "TC-REBOIL-SP") == -0.1942
    assert raw_model.gain("FC-REFLUX-OP", "FC-REFLUX-SP") == 0.2651


def test_csv_and_json_fixtures_agree(raw_model):
    assert load_model(DATA / "debutanizer.csv") == raw_model


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_round_trip_is_exact(raw_model, fmt):
    text = dump_model(raw_model, fmt)
    back = parse_model(text, fmt)
    assert back == raw_model
    assert np.array_equal(back.gains, raw_model.gains)
    # serialising again gives identical text
    assert dump_model(back, fmt) == text


def test_json_numbers_keep_their_decimal_form(raw_model):
    text = dump_model(raw_model)
    assert "-0.1942" in text and "0.2651" in text
    assert "0.19419999" not in text


def test_csv_layout(raw_model):
    lines = dump_model(raw_model, "csv").splitlines()
    assert lines[0] == "," + ",".join(MV_NAMES)
    assert lines[1].startswith("delta_move,2.0,10.0")
    assert lines[2].startswith("AI-RVP-PV,-0.1942,")
    assert len(lines) == 10


_names = st.lists(st.text("ABCDEFGH-_0123456789", min_size=1, max_size=8), min_size=1, max_size=5, unique=True)


@settings(max_examples=60, deadline=None)
@given(_names, _names, st.data())
def test_round_trip_property(mv_names, cv_names, data):
    moves = data.draw(st.lists(st.floats(1e-3, 1e3), min_size=len(mv_names), max_size=len(mv_names)))
    gains = data.draw(st.lists(
        st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=len(mv_names), max_size=len(mv_names)),
        min_size=len(cv_names), max_size=len(cv_names)))
    model = GainModel(tuple(MV(n, d) for n, d in zip(mv_names, moves)),
                      tuple(CV(n) for n in cv_names), np.array(gains, dtype=float))
    for fmt in ("json", "csv"):
        assert parse_model(dump_model(model, fmt), fmt) == model


def test_save_and_load(tmp_path, raw_model):
    for name in ("m.json", "m.csv"):
        save_model(raw_model, tmp_path / name)
        assert load_model(tmp_path / name) == raw_model


def test_gains_are_read_only(raw_model):
    with pytest.raises(ValueError):
        raw_model.gains[0, 0] = 1.0


def test_lookup_by_name(raw_model):
    assert raw_model.cv_index("TOP-PCT") == 2
    assert raw_model.mv_index("FI-FEED-PV") == 4
    with pytest.raises(KeyError):
        raw_model.cv_index("NOPE")


def _obj(**over):
    obj = {
        "mvs": [{"name": "A", "delta_move": 1.0}, {"name": "B", "delta_move": 2.0}],
        "cvs": [{"name": "X"}, {"name": "Y"}],
        "gains": [[1.0, 0.5], [0.25, 1.0]],
    }
    obj.update(over)
    return obj


@pytest.mark.parametrize("over, code", [
    ({"gains": [[1.0, 0.5]]}, "shape_mismatch"),
    ({"gains": [[1.0, 0.5], [1.0]]}, "shape_mismatch"),
    ({"mvs": [{"name": "A", "delta_move": 1.0}, {"name": "A", "delta_move": 2.0}]}, "duplicate_mv"),
    ({"cvs": [{"name": "X"}, {"name": "X"}]}, "duplicate_cv"),
    ({"mvs": [{"name": "A", "delta_move": 0.0}, {"name": "B", "delta_move": 2.0}]}, "non_positive_delta_move"),
    ({"mvs": [{"name": "A", "delta_move": -1.0}, {"name": "B", "delta_move": 2.0}]}, "non_positive_delta_move"),
    ({"gains": [[1.0, "x"], [0.25, 1.0]]}, "syntax"),
    ({"mvs": [{"name": "A"}, {"name": "B", "delta_move": 2.0}]}, "syntax"),
])
def test_parse_errors(over, code):
    with pytest.raises(ModelFormatError) as err:
        parse_model(json.dumps(_obj(**over)))
    assert err.value.code == code


def test_malformed_json_and_csv():
    with pytest.raises(ModelFormatError) as err:
        parse_model('{"mvs": [')
    assert err.value.code == "syntax"
    with pytest.raises(ModelFormatError):
        parse_model("A,B\n1,2\n", "csv")
    with pytest.raises(ModelFormatError) as err:
        parse_model(",A,B\ndelta_move,1,1\nX,1\n", "csv")
    assert err.value.code == "shape_mismatch"
    with pytest.raises(ValueError):
        parse_model("{}", "yaml")


def test_nan_gain_parses_but_fails_validation():
    text = '{"mvs": [{"name": "A", "delta_move": 1}], "cvs": [{"name": "X"}], "gains": [[NaN]]}'
    model = parse_model(text)
    assert math.isnan(model.gains[0, 0])
    report = validate_model(model)
    assert not report.ok
    assert report.codes() == ["non_finite_gain"]
    assert report.errors[0].location == (0, 0)


def test_zero_row_is_only_a_warning(raw_model):
    g = np.array(raw_model.gains)
    g[3] = 0.0
    report = validate_model(raw_model.with_gains(g))
    assert report.ok
    assert [v.code for v in report.warnings] == ["zero_row"]
    assert report.warnings[0].location == "LI-ACCUM-PF"


def test_validation_collects_every_violation():
    model = GainModel((MV("A", 0.0), MV("A", math.inf)), (CV("X"),), np.array([[1.0, np.inf]]))
    codes = validate_model(model).codes()
    assert set(codes) == {"duplicate_mv", "non_positive_delta_move", "non_finite_delta_move", "non_finite_gain"}


def test_empty_model_is_invalid():
    model = GainModel((), (), np.empty((0, 0)))
    assert "empty_model" in validate_model(model).codes()


def test_shipped_fixtures_validate_clean():
    for name in ("debutanizer", "debutanizer_scaled"):
        report = validate_model(load_model(fixture_path(name)))
        assert report.ok and not report.warnings
