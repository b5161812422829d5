import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from holoqc import report as R


@given(st.floats(allow_nan=False, allow_infinity=True))
def test_float_text_is_a_fixed_point(x):
    s = R.format_value(x)
    assert R.format_value(R.parse_value(s)) == s


def test_negative_zero_and_specials():
    assert R.format_value(-0.0) == "0"
    assert R.format_value(math.inf) == "inf"
    assert R.format_value(True) == "true"
    assert R.format_value(None) == ""
    assert R.format_value(1 / 3) == "0.333333333"
    assert math.isnan(R.parse_value("nan"))
    assert R.parse_value("Ry") == "Ry"


def test_roundtrip_is_byte_identical(tmp_path):
    rows = [{"scheme": "optical", "fidelity": 0.99999987654321, "n": 3, "ok": True},
            {"scheme": "motional", "fidelity": -0.0, "n": -1, "ok": False}]
    head = R.provenance("abc", 1e-9, mode="transfer")
    path = tmp_path / "out.csv"
    text = R.emit_report(rows, path, header=head)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.decode("utf-8") == text
    h, back = R.read_report(path)
    assert h["scenario_sha256"] == "abc" and h["tool"] == "holoqc"
    assert back[0]["fidelity"] == 0.999999877 and back[1]["ok"] is False
    assert R.emit_report(back, header=h) == text


def test_header_row_and_columns():
    text = R.render([{"a": 1, "b": 2.5}], columns=["b", "a"], header={"k": "v"})
    assert text.splitlines() == ["# k: v", "b,a", "2.5,1"]
    with pytest.raises(R.ReportError):
        R.render([])


def test_hash_is_canonical():
    assert R.content_hash({"a": 1, "b": [1, 2]}) == R.content_hash({"b": [1, 2], "a": 1})
    assert R.content_hash({"a": 1}) != R.content_hash({"a": 2})
